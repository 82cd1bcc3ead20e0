//! Independent reference implementations the integration tests check the
//! library against. Everything here is built directly from textbook gate
//! definitions — full 2^n x 2^n matrices applied by dense matrix-vector
//! products — sharing no kernel code with the simulator under test.
//!
//! Shared across test targets; not every target uses every helper.
#![allow(dead_code)]

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qbind_core::sim::{Circuit, Gate, GateKind};

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Textbook 2x2 for the single-qubit gates and the controlled-rotation
/// bodies, written out fresh rather than imported from the library.
pub fn base_matrix(kind: GateKind, theta: f64) -> [[Complex64; 2]; 2] {
    let h = theta / 2.0;
    match kind {
        GateKind::H => {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            [[c(s, 0.0), c(s, 0.0)], [c(s, 0.0), c(-s, 0.0)]]
        }
        GateKind::RX | GateKind::CRX => {
            [[c(h.cos(), 0.0), c(0.0, -h.sin())], [c(0.0, -h.sin()), c(h.cos(), 0.0)]]
        }
        GateKind::RY | GateKind::CRY => {
            [[c(h.cos(), 0.0), c(-h.sin(), 0.0)], [c(h.sin(), 0.0), c(h.cos(), 0.0)]]
        }
        GateKind::RZ | GateKind::CRZ => {
            [[Complex64::from_polar(1.0, -h), c(0.0, 0.0)], [c(0.0, 0.0), Complex64::from_polar(1.0, h)]]
        }
        GateKind::CZ | GateKind::CNOT => unreachable!("no rotation body"),
    }
}

/// Full 2^n x 2^n unitary for one gate, built entry by entry. Qubit q is
/// bit q of the basis index.
pub fn dense_unitary(gate: &Gate, n: usize, params: &[f64]) -> Vec<Vec<Complex64>> {
    let dim = 1usize << n;
    let t_mask = 1usize << gate.target;
    let c_mask = gate.control.map(|q| 1usize << q);
    let angle = gate.theta.or_else(|| gate.param_id.map(|id| params[id]));
    let mut u = vec![vec![c(0.0, 0.0); dim]; dim];
    match gate.kind {
        GateKind::CZ => {
            let cm = c_mask.unwrap();
            for j in 0..dim {
                let sign = if j & t_mask != 0 && j & cm != 0 { -1.0 } else { 1.0 };
                u[j][j] = c(sign, 0.0);
            }
        }
        GateKind::CNOT => {
            let cm = c_mask.unwrap();
            for j in 0..dim {
                let i = if j & cm != 0 { j ^ t_mask } else { j };
                u[i][j] = c(1.0, 0.0);
            }
        }
        _ => {
            let m = base_matrix(gate.kind, angle.unwrap_or(0.0));
            for j in 0..dim {
                if let Some(cm) = c_mask {
                    if j & cm == 0 {
                        u[j][j] = c(1.0, 0.0);
                        continue;
                    }
                }
                let jb = usize::from(j & t_mask != 0);
                for ib in 0..2 {
                    let i = if ib == 1 { j | t_mask } else { j & !t_mask };
                    u[i][j] += m[ib][jb];
                }
            }
        }
    }
    u
}

/// Simulates the circuit from |0...0> by dense matrix-vector products.
pub fn oracle_simulate(circuit: &Circuit, params: &[f64]) -> Vec<Complex64> {
    let dim = 1usize << circuit.num_qubits();
    let mut state = vec![c(0.0, 0.0); dim];
    state[0] = c(1.0, 0.0);
    for gate in circuit.gates() {
        let u = dense_unitary(gate, circuit.num_qubits(), params);
        let mut next = vec![c(0.0, 0.0); dim];
        for (i, row) in u.iter().enumerate() {
            for (j, &m) in row.iter().enumerate() {
                next[i] += m * state[j];
            }
        }
        state = next;
    }
    state
}

/// Per-qubit Z expectations computed from raw amplitudes.
pub fn oracle_expectations_z(state: &[Complex64], n: usize) -> Vec<f64> {
    (0..n)
        .map(|q| {
            state
                .iter()
                .enumerate()
                .map(|(k, a)| {
                    let sign = if k >> q & 1 == 0 { 1.0 } else { -1.0 };
                    sign * a.norm_sqr()
                })
                .sum()
        })
        .collect()
}

pub fn max_amp_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub const ALL_KINDS: [GateKind; 9] = [
    GateKind::H,
    GateKind::RX,
    GateKind::RY,
    GateKind::RZ,
    GateKind::CZ,
    GateKind::CNOT,
    GateKind::CRX,
    GateKind::CRY,
    GateKind::CRZ,
];

/// Random circuit over the full gate set. Roughly half the rotation gates
/// take sequential parameter slots; returns matching random parameter
/// values for them.
pub fn random_circuit(seed: u64, n: usize, len: usize) -> (Circuit, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut circuit = Circuit::new(n).unwrap();
    let mut params = Vec::new();
    for _ in 0..len {
        let kind = ALL_KINDS[rng.gen_range(0..ALL_KINDS.len())];
        let target = rng.gen_range(0..n);
        let control = if kind.is_controlled() {
            if n == 1 {
                continue; // controlled gates need a second wire
            }
            let mut q = rng.gen_range(0..n);
            while q == target {
                q = rng.gen_range(0..n);
            }
            Some(q)
        } else {
            None
        };
        let gate = if kind.is_rotation() {
            if rng.gen_bool(0.5) {
                let theta: f64 = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
                Gate { kind, target, control, theta: Some(theta), param_id: None }
            } else {
                params.push(rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI));
                Gate { kind, target, control, theta: None, param_id: Some(params.len() - 1) }
            }
        } else {
            Gate { kind, target, control, theta: None, param_id: None }
        };
        circuit.push(gate).unwrap();
    }
    (circuit, params)
}

/// Central finite-difference gradient of a scalar function.
pub fn central_fd<F: FnMut(&[f64]) -> f64>(mut f: F, x: &[f64], h: f64) -> Vec<f64> {
    let mut grad = Vec::with_capacity(x.len());
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let up = f(&probe);
        probe[i] = x[i] - h;
        let down = f(&probe);
        probe[i] = x[i];
        grad.push((up - down) / (2.0 * h));
    }
    grad
}

/// Passes when the difference is small absolutely or relatively.
pub fn grad_close(got: f64, want: f64, abs_tol: f64, rel_tol: f64) -> bool {
    let diff = (got - want).abs();
    diff <= abs_tol || diff <= rel_tol * want.abs().max(got.abs())
}
