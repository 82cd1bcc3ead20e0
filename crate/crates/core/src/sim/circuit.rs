use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::gate::{single_qubit_matrix, Gate, GateKind};
use crate::sim::kernel;
use crate::sim::state::{check_qubit_count, QuantumState};

/// Ordered gate list over a fixed qubit count. `num_params` is the size of
/// the parameter vector referenced by unbound rotations; a fully bound
/// circuit has `num_params == 0`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Circuit {
    n: usize,
    gates: Vec<Gate>,
    num_params: usize,
}

impl Circuit {
    pub fn new(n: usize) -> Result<Self> {
        check_qubit_count(n)?;
        Ok(Circuit { n, gates: Vec::new(), num_params: 0 })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn num_params(&self) -> usize {
        self.num_params
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        gate.validate(self.n)?;
        if let Some(id) = gate.param_id {
            self.num_params = self.num_params.max(id + 1);
        }
        self.gates.push(gate);
        Ok(())
    }

    pub fn extend(&mut self, gates: impl IntoIterator<Item = Gate>) -> Result<()> {
        for g in gates {
            self.push(g)?;
        }
        Ok(())
    }

    pub fn two_qubit_count(&self) -> usize {
        self.gates.iter().filter(|g| g.is_two_qubit()).count()
    }

    /// Structural check beyond per-gate validation: parameter ids must cover
    /// [0, num_params) with no gaps.
    pub fn validate(&self) -> Result<()> {
        let mut seen = vec![false; self.num_params];
        for g in &self.gates {
            if let Some(id) = g.param_id {
                seen[id] = true;
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::ParamIdGap { missing, count: self.num_params });
        }
        Ok(())
    }

    pub fn check_params(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.num_params {
            return Err(Error::ParamCountMismatch { expected: self.num_params, got: params.len() });
        }
        Ok(())
    }

    /// Runs the circuit on |0...0>.
    pub fn simulate(&self, params: &[f64]) -> Result<QuantumState> {
        let mut state = QuantumState::zero(self.n)?;
        self.apply(&mut state, params)?;
        Ok(state)
    }

    /// Applies every gate in order to `state`.
    pub fn apply(&self, state: &mut QuantumState, params: &[f64]) -> Result<()> {
        self.check_params(params)?;
        if state.num_qubits() != self.n {
            return Err(Error::LengthMismatch { expected: 1 << self.n, got: state.amps().len() });
        }
        for gate in &self.gates {
            apply_gate(state, gate, params)?;
        }
        Ok(())
    }
}

/// Applies one gate to `state`; `params` backs any unbound angle.
pub fn apply_gate(state: &mut QuantumState, gate: &Gate, params: &[f64]) -> Result<()> {
    let n = state.num_qubits();
    gate.validate(n)?;
    let amps = state.amps_mut();
    match gate.kind {
        GateKind::H => kernel::apply_single(amps, gate.target, &single_qubit_matrix(GateKind::H, 0.0)),
        GateKind::RX | GateKind::RY | GateKind::RZ => {
            let theta = gate.angle(params)?;
            kernel::apply_single(amps, gate.target, &single_qubit_matrix(gate.kind, theta));
        }
        GateKind::CZ => kernel::apply_cz(amps, gate.control.unwrap(), gate.target),
        GateKind::CNOT => kernel::apply_cnot(amps, gate.control.unwrap(), gate.target),
        GateKind::CRX | GateKind::CRY | GateKind::CRZ => {
            let theta = gate.angle(params)?;
            let base = gate.kind.base_rotation().unwrap();
            kernel::apply_controlled_single(
                amps,
                gate.control.unwrap(),
                gate.target,
                &single_qubit_matrix(base, theta),
            );
        }
    }
    Ok(())
}

/// Substitutes `params` into every unbound rotation, yielding an equivalent
/// circuit with `num_params == 0`.
pub fn bind(circuit: &Circuit, params: &[f64]) -> Result<Circuit> {
    circuit.check_params(params)?;
    let mut out = Circuit::new(circuit.num_qubits())?;
    for gate in circuit.gates() {
        let mut g = *gate;
        if let Some(id) = g.param_id {
            g.theta = Some(params[id]);
            g.param_id = None;
        }
        out.push(g)?;
    }
    Ok(out)
}
