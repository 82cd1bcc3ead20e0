//! Shot-based noisy execution, CNOT folding, zero-noise extrapolation, and
//! worst-case shot-noise bounds on downstream F1.
//!
//! Noise is simulated per trajectory: each shot replays the circuit on a
//! fresh statevector and, after every gate, fires one Bernoulli event (rate
//! `p_two` for two-qubit gates, `p_single` otherwise); when it fires, every
//! qubit the gate touched receives an independent uniformly random Pauli
//! from {I, X, Y, Z}. One basis state is then sampled per trajectory.
//! Each shot draws from its own counter-derived RNG stream, so results are
//! bit-identical at any thread count.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, seeded_stream};
use crate::sim::{apply_gate, counts_expectation_z, sample_one, Circuit, GateKind, QuantumState};
use crate::train::f1_score;

/// Depolarizing-style trajectory noise parameters plus the shot budget.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Error probability after a single-qubit gate.
    pub p_single: f64,
    /// Error probability after a two-qubit gate.
    pub p_two: f64,
    /// Trajectories to run (= measurement shots).
    pub shots: u64,
    /// Base seed; shot `s` uses stream `s` of this seed.
    pub seed: u64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel { p_single: 1e-3, p_two: 1e-2, shots: 1 << 10, seed: 0 }
    }
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("p_single", self.p_single), ("p_two", self.p_two)] {
            if !(0.0..=1.0).contains(&p) || !p.is_finite() {
                return Err(Error::Config(format!("{name} = {p} is not a probability")));
            }
        }
        if self.shots == 0 {
            return Err(Error::ZeroShots);
        }
        Ok(())
    }
}

fn check_bound(circuit: &Circuit) -> Result<()> {
    if circuit.num_params() != 0 {
        let count = circuit.gates().iter().filter(|g| g.param_id.is_some()).count();
        return Err(Error::UnboundParams { count });
    }
    Ok(())
}

fn run_trajectory(circuit: &Circuit, noise: &NoiseModel, shot: u64) -> Result<usize> {
    let mut rng = seeded_stream(noise.seed, shot);
    let mut state = QuantumState::zero(circuit.num_qubits())?;
    for gate in circuit.gates() {
        apply_gate(&mut state, gate, &[])?;
        let p = if gate.control.is_some() { noise.p_two } else { noise.p_single };
        if rng.gen::<f64>() < p {
            let touched = [Some(gate.target), gate.control];
            for q in touched.into_iter().flatten() {
                match rng.gen_range(0..4u8) {
                    0 => {}
                    1 => state.apply_pauli_x(q),
                    2 => state.apply_pauli_y(q),
                    3 => state.apply_pauli_z(q),
                    _ => unreachable!(),
                }
            }
        }
    }
    Ok(sample_one(&state, &mut rng))
}

/// Runs `noise.shots` trajectories and returns the basis-state histogram
/// (length 2^n). Deterministic for a fixed seed regardless of parallelism.
pub fn noisy_counts(circuit: &Circuit, noise: &NoiseModel) -> Result<Vec<u64>> {
    noise.validate()?;
    check_bound(circuit)?;
    let dim = 1usize << circuit.num_qubits();
    (0..noise.shots)
        .into_par_iter()
        .map(|shot| run_trajectory(circuit, noise, shot))
        .try_fold(
            || vec![0u64; dim],
            |mut acc, idx| {
                acc[idx?] += 1;
                Ok(acc)
            },
        )
        .try_reduce(
            || vec![0u64; dim],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(&b) {
                    *x += y;
                }
                Ok(a)
            },
        )
}

/// Per-qubit Z expectations estimated from a noisy histogram.
pub fn noisy_expectations(circuit: &Circuit, noise: &NoiseModel) -> Result<Vec<f64>> {
    let counts = noisy_counts(circuit, noise)?;
    (0..circuit.num_qubits()).map(|q| counts_expectation_z(&counts, q)).collect()
}

/// Replaces every CNOT with `factor` consecutive CNOTs. Odd factors leave
/// the ideal circuit action unchanged (CNOT is an involution) while scaling
/// two-qubit noise exposure, which is what zero-noise extrapolation needs.
pub fn fold_cnots(circuit: &Circuit, factor: u64) -> Result<Circuit> {
    if factor == 0 || factor % 2 == 0 {
        return Err(Error::BadFoldFactor { factor });
    }
    check_bound(circuit)?;
    let mut out = Circuit::new(circuit.num_qubits())?;
    for &gate in circuit.gates() {
        if gate.kind == GateKind::CNOT {
            for _ in 0..factor {
                out.push(gate)?;
            }
        } else {
            out.push(gate)?;
        }
    }
    Ok(out)
}

/// Ordinary least-squares intercept of y at x = 0. Needs two or more points
/// with at least two distinct x values.
pub fn linear_intercept(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::DegenerateFit);
    }
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|(x, _)| x).sum();
    let sy: f64 = points.iter().map(|(_, y)| y).sum();
    let sxx: f64 = points.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = points.iter().map(|(x, y)| x * y).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-12 {
        return Err(Error::DegenerateFit);
    }
    Ok((sy * sxx - sx * sxy) / denom)
}

/// Per-qubit measurements at each fold factor plus the extrapolated values.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ZneReport {
    pub factors: Vec<u64>,
    /// `per_factor[i][q]` = estimated Z expectation of qubit q at factors[i].
    pub per_factor: Vec<Vec<f64>>,
    /// Least-squares extrapolation to factor 0, clipped to [-1, 1].
    pub extrapolated: Vec<f64>,
}

/// Zero-noise extrapolation: measures the circuit at each fold factor and
/// fits a per-qubit line through (factor, estimate), reporting its value at
/// factor 0. The circuit is decomposed first so folding reaches all
/// two-qubit content; factor i uses an independently derived seed.
pub fn zne_estimate(circuit: &Circuit, noise: &NoiseModel, factors: &[u64]) -> Result<ZneReport> {
    noise.validate()?;
    let native = crate::compile::decompose(circuit)?;
    let n = native.num_qubits();
    let mut per_factor = Vec::with_capacity(factors.len());
    for (i, &factor) in factors.iter().enumerate() {
        let folded = fold_cnots(&native, factor)?;
        let stage = NoiseModel { seed: derive_seed(noise.seed, i as u64), ..*noise };
        per_factor.push(noisy_expectations(&folded, &stage)?);
    }
    let mut extrapolated = Vec::with_capacity(n);
    for q in 0..n {
        let points: Vec<(f64, f64)> =
            factors.iter().zip(&per_factor).map(|(&f, row)| (f as f64, row[q])).collect();
        extrapolated.push(linear_intercept(&points)?.clamp(-1.0, 1.0));
    }
    Ok(ZneReport { factors: factors.to_vec(), per_factor, extrapolated })
}

/// Worst-case F1 interval under finite-shot estimation error.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ShotNoiseBounds {
    /// Per-qubit perturbation magnitude, 1/sqrt(shots).
    pub delta: f64,
    /// Number of sign patterns examined (2^n).
    pub vectors: usize,
    pub f1_min: f64,
    pub f1_max: f64,
}

/// Bounds the F1 of a linear read-out `sigmoid(w . z + b) > 0.5` when every
/// Z estimate may be off by up to delta = 1/sqrt(shots). All 2^n sign
/// patterns are enumerated; each pattern perturbs every sequence's estimate
/// the same way (a correlated worst case), and the resulting F1 scores give
/// the interval.
pub fn shot_noise_f1_bounds(
    z: &[Vec<f64>],
    weights: &[f64],
    bias: f64,
    labels: &[bool],
    shots: u64,
) -> Result<ShotNoiseBounds> {
    if shots == 0 {
        return Err(Error::ZeroShots);
    }
    if z.is_empty() {
        return Err(Error::ZeroSamples);
    }
    if labels.len() != z.len() {
        return Err(Error::LengthMismatch { expected: z.len(), got: labels.len() });
    }
    let n = weights.len();
    for row in z {
        if row.len() != n {
            return Err(Error::LengthMismatch { expected: n, got: row.len() });
        }
    }
    if n == 0 || n > crate::sim::MAX_QUBITS {
        return Err(Error::Config(format!("cannot enumerate sign patterns for {n} qubits")));
    }
    let delta = 1.0 / (shots as f64).sqrt();
    let margins: Vec<f64> =
        z.iter().map(|row| row.iter().zip(weights).map(|(v, w)| v * w).sum::<f64>() + bias).collect();
    let mut f1_min = f64::INFINITY;
    let mut f1_max = f64::NEG_INFINITY;
    for mask in 0u64..(1u64 << n) {
        let shift: f64 = weights
            .iter()
            .enumerate()
            .map(|(q, w)| {
                let sign = if mask >> q & 1 == 1 { 1.0 } else { -1.0 };
                w * sign * delta
            })
            .sum();
        let preds: Vec<bool> =
            margins.iter().map(|m| crate::model::sigmoid(m + shift) > 0.5).collect();
        let f1 = f1_score(&preds, labels)?;
        f1_min = f1_min.min(f1);
        f1_max = f1_max.max(f1);
    }
    Ok(ShotNoiseBounds { delta, vectors: 1usize << n, f1_min, f1_max })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::Gate;
    use std::f64::consts::PI;

    #[test]
    fn noiseless_trajectories_reproduce_a_basis_state() {
        // RX(pi)|0> = -i|1>: every shot must land on index 1.
        let mut c = Circuit::new(1).unwrap();
        c.push(Gate::rx(0, PI)).unwrap();
        let noise = NoiseModel { p_single: 0.0, p_two: 0.0, shots: 64, seed: 7 };
        let counts = noisy_counts(&c, &noise).unwrap();
        assert_eq!(counts, vec![0, 64]);
        let exps = noisy_expectations(&c, &noise).unwrap();
        assert_eq!(exps, vec![-1.0]);
    }

    #[test]
    fn counts_are_deterministic_and_seed_sensitive() {
        let mut c = Circuit::new(2).unwrap();
        c.extend([Gate::h(0), Gate::cnot(0, 1)]).unwrap();
        let noise = NoiseModel { p_single: 0.05, p_two: 0.05, shots: 500, seed: 11 };
        let a = noisy_counts(&c, &noise).unwrap();
        let b = noisy_counts(&c, &noise).unwrap();
        assert_eq!(a, b);
        let other = noisy_counts(&c, &NoiseModel { seed: 12, ..noise }).unwrap();
        assert_ne!(a, other);
        assert_eq!(a.iter().sum::<u64>(), 500);
    }

    #[test]
    fn certain_two_qubit_noise_fully_depolarizes() {
        // A guaranteed uniform Pauli on both qubits after the CNOT is the
        // completely depolarizing channel: both Z expectations average to 0.
        let mut c = Circuit::new(2).unwrap();
        c.extend([Gate::rx(0, PI), Gate::cnot(0, 1)]).unwrap();
        let noise = NoiseModel { p_single: 0.0, p_two: 1.0, shots: 1 << 14, seed: 3 };
        let exps = noisy_expectations(&c, &noise).unwrap();
        for e in exps {
            assert!(e.abs() < 0.05, "expected depolarized <Z>, got {e}");
        }
    }

    #[test]
    fn small_noise_stays_near_ideal() {
        let mut c = Circuit::new(1).unwrap();
        c.push(Gate::ry(0, 0.6)).unwrap();
        let ideal = c.simulate(&[]).unwrap().expectations_z();
        let noise = NoiseModel { p_single: 1e-3, p_two: 1e-2, shots: 1 << 14, seed: 5 };
        let exps = noisy_expectations(&c, &noise).unwrap();
        assert!((exps[0] - ideal[0]).abs() < 0.03);
    }

    #[test]
    fn rejects_bad_inputs() {
        let c = Circuit::new(1).unwrap();
        let bad_shots = NoiseModel { shots: 0, ..NoiseModel::default() };
        assert!(matches!(noisy_counts(&c, &bad_shots), Err(Error::ZeroShots)));
        let bad_p = NoiseModel { p_single: 1.5, ..NoiseModel::default() };
        assert!(matches!(noisy_counts(&c, &bad_p), Err(Error::Config(_))));
        let mut parametric = Circuit::new(1).unwrap();
        parametric.push(Gate::parametric(GateKind::RX, None, 0, 0)).unwrap();
        assert!(matches!(
            noisy_counts(&parametric, &NoiseModel::default()),
            Err(Error::UnboundParams { count: 1 })
        ));
    }

    #[test]
    fn folding_preserves_ideal_action_and_counts() {
        let mut c = Circuit::new(2).unwrap();
        c.extend([Gate::h(0), Gate::cnot(0, 1), Gate::ry(1, 0.4), Gate::cnot(1, 0)]).unwrap();
        let unchanged = fold_cnots(&c, 1).unwrap();
        assert_eq!(unchanged.gates().len(), c.gates().len());
        for factor in [3u64, 5, 7] {
            let folded = fold_cnots(&c, factor).unwrap();
            assert_eq!(folded.two_qubit_count(), 2 * factor as usize);
            let a = c.simulate(&[]).unwrap();
            let b = folded.simulate(&[]).unwrap();
            for (x, y) in a.amps().iter().zip(b.amps()) {
                assert!((x - y).norm() < 1e-12);
            }
        }
        assert!(matches!(fold_cnots(&c, 0), Err(Error::BadFoldFactor { factor: 0 })));
        assert!(matches!(fold_cnots(&c, 4), Err(Error::BadFoldFactor { factor: 4 })));
    }

    #[test]
    fn intercept_recovers_collinear_points() {
        let pts = [(1.0, 0.8), (3.0, 0.6), (5.0, 0.4), (7.0, 0.2)];
        let a = linear_intercept(&pts).unwrap();
        assert!((a - 0.9).abs() < 1e-12, "intercept {a}");
        assert!(matches!(linear_intercept(&[(1.0, 0.5)]), Err(Error::DegenerateFit)));
        assert!(matches!(
            linear_intercept(&[(2.0, 0.5), (2.0, 0.7)]),
            Err(Error::DegenerateFit)
        ));
    }

    #[test]
    fn zne_report_shape_and_determinism() {
        let mut c = Circuit::new(2).unwrap();
        c.extend([Gate::ry(0, 0.7), Gate::cz(0, 1), Gate::rx(1, 0.3)]).unwrap();
        let noise = NoiseModel { p_single: 1e-3, p_two: 1e-2, shots: 2048, seed: 9 };
        let factors = [1u64, 3, 5];
        let r1 = zne_estimate(&c, &noise, &factors).unwrap();
        let r2 = zne_estimate(&c, &noise, &factors).unwrap();
        assert_eq!(r1.per_factor, r2.per_factor);
        assert_eq!(r1.extrapolated, r2.extrapolated);
        assert_eq!(r1.per_factor.len(), 3);
        assert_eq!(r1.extrapolated.len(), 2);
        for e in &r1.extrapolated {
            assert!((-1.0..=1.0).contains(e));
        }
        assert!(matches!(zne_estimate(&c, &noise, &[1]), Err(Error::DegenerateFit)));
    }

    #[test]
    fn zne_beats_raw_on_an_amplified_circuit() {
        // Deep two-qubit circuit where noise visibly biases <Z>; the
        // extrapolated value should land closer to ideal than the raw run.
        let mut c = Circuit::new(2).unwrap();
        c.push(Gate::ry(0, 0.9)).unwrap();
        for _ in 0..6 {
            c.push(Gate::cnot(0, 1)).unwrap();
            c.push(Gate::cnot(0, 1)).unwrap();
        }
        let ideal = c.simulate(&[]).unwrap().expectations_z()[0];
        let noise = NoiseModel { p_single: 0.0, p_two: 0.02, shots: 1 << 14, seed: 21 };
        let report = zne_estimate(&c, &noise, &[1, 3, 5, 7]).unwrap();
        let raw = report.per_factor[0][0];
        let mitigated = report.extrapolated[0];
        assert!(
            (mitigated - ideal).abs() < (raw - ideal).abs(),
            "zne {mitigated} vs raw {raw}, ideal {ideal}"
        );
    }

    #[test]
    fn sign_pattern_count_and_collapse() {
        let z = vec![vec![0.8, 0.6, -0.2, 0.1], vec![-0.7, -0.5, 0.3, -0.2]];
        let labels = [true, false];
        let w = [0.5, 0.5, 0.5, 0.5];
        let b = shot_noise_f1_bounds(&z, &w, 0.0, &labels, 1 << 10).unwrap();
        assert_eq!(b.vectors, 16);
        assert!(b.f1_min <= b.f1_max);
        // Enormous shot budgets shrink delta until no prediction can flip.
        let tight = shot_noise_f1_bounds(&z, &w, 0.0, &labels, 1 << 30).unwrap();
        assert_eq!(tight.f1_min, tight.f1_max);
        assert_eq!(tight.f1_max, 1.0);
    }

    #[test]
    fn interval_narrows_with_more_shots() {
        // One borderline sequence: flips under the coarse budget only.
        let z = vec![vec![0.9, 0.9], vec![-0.9, -0.9], vec![0.05, 0.05]];
        let labels = [true, false, true];
        let w = [1.0, 1.0];
        let coarse = shot_noise_f1_bounds(&z, &w, 0.0, &labels, 1 << 6).unwrap();
        let fine = shot_noise_f1_bounds(&z, &w, 0.0, &labels, 1 << 14).unwrap();
        let coarse_width = coarse.f1_max - coarse.f1_min;
        let fine_width = fine.f1_max - fine.f1_min;
        assert!(coarse_width > 0.0);
        assert_eq!(fine_width, 0.0);
        assert!(coarse_width >= fine_width);
    }

    #[test]
    fn single_qubit_bounds_match_hand_enumeration() {
        // n = 1, w = 1, b = 0, delta = 0.25: scores are sigmoid(z +/- 0.25).
        let z = vec![vec![0.1], vec![-0.4]];
        let labels = [true, false];
        let b = shot_noise_f1_bounds(&z, &[1.0], 0.0, &labels, 16).unwrap();
        assert_eq!(b.vectors, 2);
        assert!((b.delta - 0.25).abs() < 1e-15);
        // s = +1: margins 0.35, -0.15 -> preds (T, F) -> F1 = 1.
        // s = -1: margins -0.15, -0.65 -> preds (F, F) -> F1 = 0.
        assert_eq!(b.f1_max, 1.0);
        assert_eq!(b.f1_min, 0.0);
    }

    #[test]
    fn bounds_reject_malformed_inputs() {
        let z = vec![vec![0.1, 0.2]];
        assert!(matches!(
            shot_noise_f1_bounds(&z, &[1.0, 1.0], 0.0, &[true], 0),
            Err(Error::ZeroShots)
        ));
        assert!(matches!(
            shot_noise_f1_bounds(&[], &[1.0], 0.0, &[], 100),
            Err(Error::ZeroSamples)
        ));
        assert!(matches!(
            shot_noise_f1_bounds(&z, &[1.0], 0.0, &[true], 100),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            shot_noise_f1_bounds(&z, &[1.0, 1.0], 0.0, &[true, false], 100),
            Err(Error::LengthMismatch { .. })
        ));
    }
}
