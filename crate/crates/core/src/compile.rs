//! Exact gate decomposition into the native set {H, RX, RY, RZ, CNOT},
//! adjacent-gate fusion, and two-qubit cost reports.
//!
//! The rewrites are matrix-exact (no global phase is introduced):
//!   CZ(c,t)       = H(t) CNOT(c,t) H(t)
//!   CRZ(c,t,a)    = RZ(t,a/2) CNOT RZ(t,-a/2) CNOT
//!   CRX(c,t,a)    = H(t) CRZ-expansion H(t)         (X = H Z H)
//!   CRY(c,t,a)    = RX(t,pi/2) CRZ-expansion RX(t,-pi/2)   (Y = RX(-pi/2) Z RX(pi/2))
//! Decomposition requires bound angles: a parameter reference cannot express
//! the half-angle rotations; bind first.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{Circuit, Gate, GateKind};

/// Rewrites every controlled gate into the native set. Native gates pass
/// through untouched, so decomposing twice equals decomposing once.
pub fn decompose(circuit: &Circuit) -> Result<Circuit> {
    if circuit.num_params() != 0 {
        let unbound = circuit.gates().iter().filter(|g| g.param_id.is_some()).count();
        return Err(Error::UnboundParams { count: unbound });
    }
    let mut out = Circuit::new(circuit.num_qubits())?;
    for gate in circuit.gates() {
        match gate.kind {
            GateKind::H | GateKind::RX | GateKind::RY | GateKind::RZ | GateKind::CNOT => {
                out.push(*gate)?;
            }
            GateKind::CZ => {
                let (c, t) = (gate.control.unwrap(), gate.target);
                out.extend([Gate::h(t), Gate::cnot(c, t), Gate::h(t)])?;
            }
            GateKind::CRZ => {
                push_crz(&mut out, gate.control.unwrap(), gate.target, gate.theta.unwrap())?;
            }
            GateKind::CRX => {
                let (c, t, a) = (gate.control.unwrap(), gate.target, gate.theta.unwrap());
                out.push(Gate::h(t))?;
                push_crz(&mut out, c, t, a)?;
                out.push(Gate::h(t))?;
            }
            GateKind::CRY => {
                let (c, t, a) = (gate.control.unwrap(), gate.target, gate.theta.unwrap());
                out.push(Gate::rx(t, FRAC_PI_2))?;
                push_crz(&mut out, c, t, a)?;
                out.push(Gate::rx(t, -FRAC_PI_2))?;
            }
        }
    }
    Ok(out)
}

fn push_crz(out: &mut Circuit, c: usize, t: usize, a: f64) -> Result<()> {
    out.extend([
        Gate::rz(t, a / 2.0),
        Gate::cnot(c, t),
        Gate::rz(t, -a / 2.0),
        Gate::cnot(c, t),
    ])
}

/// Removes locally trivial structure from a bound circuit: adjacent
/// self-inverse pairs (H H, CNOT CNOT, CZ CZ on the same wires) cancel, and
/// adjacent same-axis single-qubit rotations on one wire merge; a merged
/// rotation is dropped only when its angle is a multiple of 4*pi (the true
/// identity — 2*pi is -I on the wire). One pass; run to fixpoint if needed.
pub fn fuse_trivial(circuit: &Circuit) -> Result<Circuit> {
    if circuit.num_params() != 0 {
        let unbound = circuit.gates().iter().filter(|g| g.param_id.is_some()).count();
        return Err(Error::UnboundParams { count: unbound });
    }
    let mut kept: Vec<Gate> = Vec::with_capacity(circuit.gates().len());
    for &gate in circuit.gates() {
        if let Some(&prev) = kept.last() {
            if cancels(&prev, &gate) {
                kept.pop();
                continue;
            }
            if let Some(merged) = merge_rotations(&prev, &gate) {
                kept.pop();
                if let Some(g) = merged {
                    kept.push(g);
                }
                continue;
            }
        }
        kept.push(gate);
    }
    let mut out = Circuit::new(circuit.num_qubits())?;
    out.extend(kept)?;
    Ok(out)
}

fn cancels(a: &Gate, b: &Gate) -> bool {
    if a.kind != b.kind || a.target != b.target || a.control != b.control {
        return false;
    }
    matches!(a.kind, GateKind::H | GateKind::CNOT | GateKind::CZ)
}

/// Some(None) = both gates vanish; Some(Some(g)) = replaced by one rotation.
fn merge_rotations(a: &Gate, b: &Gate) -> Option<Option<Gate>> {
    if a.kind != b.kind || a.target != b.target {
        return None;
    }
    if !matches!(a.kind, GateKind::RX | GateKind::RY | GateKind::RZ) {
        return None;
    }
    let sum = a.theta.unwrap() + b.theta.unwrap();
    let period = 4.0 * std::f64::consts::PI;
    let folded = sum.rem_euclid(period);
    if folded.abs() < 1e-14 || (period - folded).abs() < 1e-14 {
        return Some(None);
    }
    let mut g = *a;
    g.theta = Some(sum);
    Some(Some(g))
}

/// Gate totals before and after decomposition.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GateCountReport {
    pub qubits: usize,
    pub total_pre: usize,
    pub total_post: usize,
    pub two_qubit_pre: usize,
    pub two_qubit_post: usize,
    pub params: usize,
    pub per_kind_pre: BTreeMap<String, usize>,
    pub per_kind_post: BTreeMap<String, usize>,
}

/// Counts a circuit as written and after decomposition to the native set.
/// Counting is structural — parameter references are fine (they are bound to
/// zero internally, which cannot change gate counts).
pub fn count_gates(circuit: &Circuit) -> Result<GateCountReport> {
    let bound = if circuit.num_params() == 0 {
        circuit.clone()
    } else {
        crate::sim::bind(circuit, &vec![0.0; circuit.num_params()])?
    };
    let post = decompose(&bound)?;
    let tally = |c: &Circuit| {
        let mut map = BTreeMap::new();
        for g in c.gates() {
            *map.entry(g.kind.name().to_string()).or_insert(0) += 1;
        }
        map
    };
    Ok(GateCountReport {
        qubits: circuit.num_qubits(),
        total_pre: circuit.gates().len(),
        total_post: post.gates().len(),
        two_qubit_pre: circuit.two_qubit_count(),
        two_qubit_post: post.two_qubit_count(),
        params: circuit.num_params(),
        per_kind_pre: tally(&bound),
        per_kind_post: tally(&post),
    })
}
