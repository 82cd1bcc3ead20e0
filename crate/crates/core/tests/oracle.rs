//! Simulator correctness against a dense matrix-product reference built
//! from first principles in `common`.

mod common;

use common::{
    central_fd, grad_close, max_amp_diff, oracle_expectations_z, oracle_simulate, random_circuit,
};
use proptest::prelude::*;
use qbind_core::sim::{backward, bind, Circuit, Cotangent};

#[test]
fn two_hundred_random_circuits_match_the_dense_oracle() {
    for seed in 0..200u64 {
        let n = 1 + (seed % 5) as usize;
        let len = 10 + (seed as usize * 7) % 41;
        let (circuit, params) = random_circuit(seed, n, len);
        let got = circuit.simulate(&params).unwrap();
        let want = oracle_simulate(&circuit, &params);
        let diff = max_amp_diff(got.amps(), &want);
        assert!(diff <= 1e-10, "seed {seed} (n={n}, len={len}): amplitude diff {diff}");
    }
}

#[test]
fn z_expectations_match_the_oracle() {
    for seed in 0..40u64 {
        let n = 2 + (seed % 4) as usize;
        let (circuit, params) = random_circuit(500 + seed, n, 25);
        let state = circuit.simulate(&params).unwrap();
        let want = oracle_expectations_z(state.amps(), n);
        for (q, (got, want)) in state.expectations_z().iter().zip(&want).enumerate() {
            assert!((got - want).abs() <= 1e-12, "seed {seed} qubit {q}: {got} vs {want}");
        }
    }
}

#[test]
fn adjoint_gradients_match_finite_differences_on_random_circuits() {
    let mut checked = 0usize;
    for seed in 0..30u64 {
        let n = 2 + (seed % 3) as usize;
        let (circuit, params) = random_circuit(1000 + seed, n, 30);
        if params.is_empty() {
            continue;
        }
        let weights: Vec<f64> = (0..n).map(|q| 0.3 + 0.2 * q as f64).collect();
        let grads = backward(&circuit, &params, Cotangent::ZExpectations(&weights)).unwrap();
        let f = |p: &[f64]| -> f64 {
            let state = circuit.simulate(p).unwrap();
            state.expectations_z().iter().zip(&weights).map(|(z, w)| z * w).sum()
        };
        let fd = central_fd(f, &params, 1e-5);
        for (i, (g, d)) in grads.iter().zip(&fd).enumerate() {
            assert!(
                grad_close(*g, *d, 1e-8, 1e-6),
                "seed {seed} param {i}: adjoint {g} vs fd {d}"
            );
            checked += 1;
        }
    }
    assert!(checked > 100, "only {checked} gradient entries exercised");
}

#[test]
fn gradient_of_a_bound_circuit_is_empty() {
    let (circuit, params) = random_circuit(77, 3, 20);
    let bound = bind(&circuit, &params).unwrap();
    let weights = vec![1.0; 3];
    let grads = backward(&bound, &[], Cotangent::ZExpectations(&weights)).unwrap();
    assert!(grads.is_empty());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn norm_is_preserved(seed in 0u64..10_000, n in 1usize..=5, len in 1usize..60) {
        let (circuit, params) = random_circuit(seed, n, len);
        let state = circuit.simulate(&params).unwrap();
        prop_assert!((state.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn oracle_agreement_holds_across_shapes(seed in 0u64..1_000_000, n in 1usize..=4, len in 0usize..40) {
        let (circuit, params) = random_circuit(seed, n, len);
        let got = circuit.simulate(&params).unwrap();
        let want = oracle_simulate(&circuit, &params);
        prop_assert!(max_amp_diff(got.amps(), &want) <= 1e-10);
    }

    #[test]
    fn reversed_inverses_undo_any_circuit(seed in 0u64..1_000_000, n in 1usize..=4, len in 1usize..30) {
        let (circuit, params) = random_circuit(seed, n, len);
        let bound = bind(&circuit, &params).unwrap();
        let mut undo = Circuit::new(n).unwrap();
        for gate in bound.gates().iter().rev() {
            undo.push(gate.inverse().unwrap()).unwrap();
        }
        let mut state = bound.simulate(&[]).unwrap();
        undo.apply(&mut state, &[]).unwrap();
        prop_assert!(state.probability(0) > 1.0 - 1e-10);
    }
}
