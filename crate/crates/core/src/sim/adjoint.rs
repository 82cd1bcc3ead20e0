//! Reverse-mode circuit differentiation by the adjoint method.
//!
//! One forward simulation plus one backward sweep gives exact derivatives of
//! a scalar loss with respect to every circuit parameter, including the
//! angles of controlled rotations (which have no simple shift rule). At step
//! `t` (last gate first) the sweep keeps two vectors: `s`, rewound to the
//! state before gate `t`, and the cotangent `b`, pulled back through the same
//! inverses. With the convention dL = 2 Re <g, dpsi> for cotangent g, the
//! contribution of an angle is 2 Re <b, (dU_t/dtheta) s>.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sim::circuit::Circuit;
use crate::sim::gate::{single_qubit_matrix, single_qubit_matrix_deriv, Gate, GateKind};
use crate::sim::kernel;
use crate::sim::state::QuantumState;

/// Seed of the backward sweep: how the downstream scalar depends on the
/// final state.
pub enum Cotangent<'a> {
    /// g with dL = 2 Re sum_k conj(g_k) dpsi_k.
    State(&'a [Complex64]),
    /// dL/d<Z_q> for each qubit; the state cotangent is formed internally.
    ZExpectations(&'a [f64]),
}

/// Gradient of the scalar seeded by `cotangent` with respect to `params`.
/// Runs its own forward pass; use [`backward_from`] when the final state is
/// already in hand.
pub fn backward(circuit: &Circuit, params: &[f64], cotangent: Cotangent) -> Result<Vec<f64>> {
    let final_state = circuit.simulate(params)?;
    backward_from(circuit, params, &final_state, cotangent)
}

/// As [`backward`], reusing `final_state` from an earlier simulation of the
/// same circuit and parameters.
pub fn backward_from(
    circuit: &Circuit,
    params: &[f64],
    final_state: &QuantumState,
    cotangent: Cotangent,
) -> Result<Vec<f64>> {
    circuit.check_params(params)?;
    let dim = 1usize << circuit.num_qubits();
    if final_state.num_qubits() != circuit.num_qubits() {
        return Err(Error::LengthMismatch { expected: dim, got: final_state.amps().len() });
    }

    let mut b: Vec<Complex64> = match cotangent {
        Cotangent::State(g) => {
            if g.len() != dim {
                return Err(Error::LengthMismatch { expected: dim, got: g.len() });
            }
            g.to_vec()
        }
        Cotangent::ZExpectations(z_grads) => {
            if z_grads.len() != circuit.num_qubits() {
                return Err(Error::LengthMismatch { expected: circuit.num_qubits(), got: z_grads.len() });
            }
            // <Z_q> = sum_k sign_qk |psi_k|^2, so the state cotangent is the
            // final amplitude scaled by the signed coefficient sum.
            let mut g = vec![Complex64::new(0.0, 0.0); dim];
            for (k, amp) in final_state.amps().iter().enumerate() {
                let mut coeff = 0.0;
                for (q, dz) in z_grads.iter().enumerate() {
                    coeff += if k & (1 << q) == 0 { *dz } else { -*dz };
                }
                g[k] = coeff * amp;
            }
            g
        }
    };

    let mut s: Vec<Complex64> = final_state.amps().to_vec();
    let mut grads = vec![0.0; circuit.num_params()];
    let mut scratch = vec![Complex64::new(0.0, 0.0); dim];

    for gate in circuit.gates().iter().rev() {
        apply_inverse(&mut s, gate, params)?;
        if let Some(id) = gate.param_id {
            let theta = gate.angle(params)?;
            scratch.copy_from_slice(&s);
            apply_derivative(&mut scratch, gate, theta);
            let mut dot = 0.0;
            for (bk, vk) in b.iter().zip(&scratch) {
                dot += (bk.conj() * vk).re;
            }
            grads[id] += 2.0 * dot;
        }
        apply_inverse(&mut b, gate, params)?;
    }
    Ok(grads)
}

fn apply_inverse(amps: &mut [Complex64], gate: &Gate, params: &[f64]) -> Result<()> {
    match gate.kind {
        GateKind::H => kernel::apply_single(amps, gate.target, &single_qubit_matrix(GateKind::H, 0.0)),
        GateKind::RX | GateKind::RY | GateKind::RZ => {
            let theta = gate.angle(params)?;
            kernel::apply_single(amps, gate.target, &single_qubit_matrix(gate.kind, -theta));
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
                &single_qubit_matrix(base, -theta),
            );
        }
    }
    Ok(())
}

/// Replaces `amps` with (dU/dtheta) amps. For controlled rotations the
/// derivative operator is the rotation derivative on the control=1 subspace
/// and zero elsewhere.
fn apply_derivative(amps: &mut [Complex64], gate: &Gate, theta: f64) {
    match gate.kind {
        GateKind::RX | GateKind::RY | GateKind::RZ => {
            kernel::apply_single(amps, gate.target, &single_qubit_matrix_deriv(gate.kind, theta));
        }
        GateKind::CRX | GateKind::CRY | GateKind::CRZ => {
            let control = gate.control.unwrap();
            let cmask = 1usize << control;
            for (k, amp) in amps.iter_mut().enumerate() {
                if k & cmask == 0 {
                    *amp = Complex64::new(0.0, 0.0);
                }
            }
            let base = gate.kind.base_rotation().unwrap();
            kernel::apply_controlled_single(
                amps,
                control,
                gate.target,
                &single_qubit_matrix_deriv(base, theta),
            );
        }
        _ => unreachable!("derivative requested for non-rotation {}", gate.kind.name()),
    }
}
