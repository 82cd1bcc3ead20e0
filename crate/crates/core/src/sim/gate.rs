use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    RX,
    RY,
    RZ,
    H,
    CZ,
    CNOT,
    CRX,
    CRY,
    CRZ,
}

impl GateKind {
    pub fn is_rotation(self) -> bool {
        matches!(
            self,
            GateKind::RX | GateKind::RY | GateKind::RZ | GateKind::CRX | GateKind::CRY | GateKind::CRZ
        )
    }

    pub fn is_controlled(self) -> bool {
        matches!(
            self,
            GateKind::CZ | GateKind::CNOT | GateKind::CRX | GateKind::CRY | GateKind::CRZ
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::RX => "RX",
            GateKind::RY => "RY",
            GateKind::RZ => "RZ",
            GateKind::H => "H",
            GateKind::CZ => "CZ",
            GateKind::CNOT => "CNOT",
            GateKind::CRX => "CRX",
            GateKind::CRY => "CRY",
            GateKind::CRZ => "CRZ",
        }
    }

    /// For controlled rotations, the rotation applied on the target when the
    /// control is set.
    pub fn base_rotation(self) -> Option<GateKind> {
        match self {
            GateKind::CRX => Some(GateKind::RX),
            GateKind::CRY => Some(GateKind::RY),
            GateKind::CRZ => Some(GateKind::RZ),
            _ => None,
        }
    }
}

/// One gate in a circuit. Rotations carry their angle either bound (`theta`)
/// or as a reference into a parameter vector (`param_id`); exactly one of the
/// two is set. Non-rotations carry neither.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Gate {
    pub kind: GateKind,
    pub target: usize,
    pub control: Option<usize>,
    pub theta: Option<f64>,
    pub param_id: Option<usize>,
}

impl Gate {
    pub fn h(target: usize) -> Gate {
        Gate { kind: GateKind::H, target, control: None, theta: None, param_id: None }
    }

    pub fn rx(target: usize, theta: f64) -> Gate {
        Gate { kind: GateKind::RX, target, control: None, theta: Some(theta), param_id: None }
    }

    pub fn ry(target: usize, theta: f64) -> Gate {
        Gate { kind: GateKind::RY, target, control: None, theta: Some(theta), param_id: None }
    }

    pub fn rz(target: usize, theta: f64) -> Gate {
        Gate { kind: GateKind::RZ, target, control: None, theta: Some(theta), param_id: None }
    }

    pub fn cz(control: usize, target: usize) -> Gate {
        Gate { kind: GateKind::CZ, target, control: Some(control), theta: None, param_id: None }
    }

    pub fn cnot(control: usize, target: usize) -> Gate {
        Gate { kind: GateKind::CNOT, target, control: Some(control), theta: None, param_id: None }
    }

    pub fn crx(control: usize, target: usize, theta: f64) -> Gate {
        Gate { kind: GateKind::CRX, target, control: Some(control), theta: Some(theta), param_id: None }
    }

    pub fn cry(control: usize, target: usize, theta: f64) -> Gate {
        Gate { kind: GateKind::CRY, target, control: Some(control), theta: Some(theta), param_id: None }
    }

    pub fn crz(control: usize, target: usize, theta: f64) -> Gate {
        Gate { kind: GateKind::CRZ, target, control: Some(control), theta: Some(theta), param_id: None }
    }

    /// Rotation gate whose angle is read from a parameter vector.
    pub fn parametric(kind: GateKind, control: Option<usize>, target: usize, param_id: usize) -> Gate {
        Gate { kind, target, control, theta: None, param_id: Some(param_id) }
    }

    pub fn is_two_qubit(&self) -> bool {
        self.kind.is_controlled()
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.target >= n {
            return Err(Error::QubitOutOfRange { index: self.target, n });
        }
        match (self.kind.is_controlled(), self.control) {
            (true, Some(c)) => {
                if c >= n {
                    return Err(Error::QubitOutOfRange { index: c, n });
                }
                if c == self.target {
                    return Err(Error::BadControl { gate: self.kind.name() });
                }
            }
            (true, None) | (false, Some(_)) => {
                return Err(Error::BadControl { gate: self.kind.name() });
            }
            (false, None) => {}
        }
        if self.kind.is_rotation() {
            if self.theta.is_none() == self.param_id.is_none() {
                return Err(Error::MissingAngle { gate: self.kind.name() });
            }
        } else if self.theta.is_some() || self.param_id.is_some() {
            return Err(Error::UnexpectedAngle { gate: self.kind.name() });
        }
        Ok(())
    }

    /// Angle for this gate, looking up `param_id` in `params` when unbound.
    /// Callers guarantee `params` covers the circuit's parameter count.
    pub fn angle(&self, params: &[f64]) -> Result<f64> {
        match (self.theta, self.param_id) {
            (Some(t), None) => Ok(t),
            (None, Some(id)) => params.get(id).copied().ok_or(Error::ParamCountMismatch {
                expected: id + 1,
                got: params.len(),
            }),
            _ => Err(Error::MissingAngle { gate: self.kind.name() }),
        }
    }

    /// Inverse of a bound gate (rotations flip sign; the rest are involutions).
    pub fn inverse(&self) -> Result<Gate> {
        let mut g = *self;
        if self.kind.is_rotation() {
            match self.theta {
                Some(t) => g.theta = Some(-t),
                None => return Err(Error::UnboundParams { count: 1 }),
            }
        }
        Ok(g)
    }
}

/// Row-major 2x2 matrix of a single-qubit gate kind at angle `theta`
/// (ignored for H).
pub fn single_qubit_matrix(kind: GateKind, theta: f64) -> [Complex64; 4] {
    let z = |re: f64, im: f64| Complex64::new(re, im);
    match kind {
        GateKind::H => {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            [z(s, 0.0), z(s, 0.0), z(s, 0.0), z(-s, 0.0)]
        }
        GateKind::RX => {
            let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
            [z(c, 0.0), z(0.0, -s), z(0.0, -s), z(c, 0.0)]
        }
        GateKind::RY => {
            let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
            [z(c, 0.0), z(-s, 0.0), z(s, 0.0), z(c, 0.0)]
        }
        GateKind::RZ => {
            let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
            [z(c, -s), z(0.0, 0.0), z(0.0, 0.0), z(c, s)]
        }
        _ => unreachable!("{} is not single-qubit", kind.name()),
    }
}

/// d/dtheta of `single_qubit_matrix` for the rotation kinds.
pub fn single_qubit_matrix_deriv(kind: GateKind, theta: f64) -> [Complex64; 4] {
    let z = |re: f64, im: f64| Complex64::new(re, im);
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    match kind {
        GateKind::RX => [z(-s / 2.0, 0.0), z(0.0, -c / 2.0), z(0.0, -c / 2.0), z(-s / 2.0, 0.0)],
        GateKind::RY => [z(-s / 2.0, 0.0), z(-c / 2.0, 0.0), z(c / 2.0, 0.0), z(-s / 2.0, 0.0)],
        GateKind::RZ => [z(-s / 2.0, -c / 2.0), z(0.0, 0.0), z(0.0, 0.0), z(-s / 2.0, c / 2.0)],
        _ => unreachable!("{} has no angle", kind.name()),
    }
}
