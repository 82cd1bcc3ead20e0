//! Hot paths, smallest to largest: raw statevector simulation, full model
//! forward/backward passes, shot-sampled noisy execution, and mitigation.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use qbind_bench::{bound_circuit, hybrid, nine_mer};
use qbind_core::ansatz::TemplateId;
use qbind_core::attrib::integrated_gradients;
use qbind_core::model::SequenceModel;
use qbind_core::noise::{noisy_expectations, zne_estimate, NoiseModel};

fn statevector(c: &mut Criterion) {
    let mut group = c.benchmark_group("simulate");
    for qubits in [4, 8, 10] {
        let circuit = bound_circuit(TemplateId::T8, qubits, 9, 11);
        group.bench_function(format!("t8_n{qubits}_len9"), |b| {
            b.iter(|| black_box(&circuit).simulate(&[]).unwrap())
        });
    }
    group.finish();
}

fn model_passes(c: &mut Criterion) {
    let mut group = c.benchmark_group("hybrid");
    let peptide = nine_mer(5);
    for (id, qubits) in [(TemplateId::T9, 2), (TemplateId::T8, 4)] {
        let model = hybrid(id, qubits, 1);
        let tag = format!("t{}_n{qubits}", u8::from(id));
        group.bench_function(format!("forward_{tag}"), |b| {
            b.iter(|| model.forward(black_box(&peptide)).unwrap())
        });
        let mut grads = vec![0.0; model.num_params()];
        group.bench_function(format!("backward_{tag}"), |b| {
            b.iter(|| {
                grads.fill(0.0);
                model.backward(black_box(&peptide), 1.0, &mut grads).unwrap()
            })
        });
    }
    group.finish();
}

fn noisy_execution(c: &mut Criterion) {
    let mut group = c.benchmark_group("noise");
    let circuit = bound_circuit(TemplateId::T9, 2, 9, 3);
    let noise = NoiseModel { shots: 1024, ..NoiseModel::default() };
    group.bench_function("trajectories_1024", |b| {
        b.iter(|| noisy_expectations(black_box(&circuit), &noise).unwrap())
    });
    let budget = NoiseModel { shots: 256, ..NoiseModel::default() };
    group.bench_function("zne_factors4_256", |b| {
        b.iter(|| zne_estimate(black_box(&circuit), &budget, &[1, 3, 5, 7]).unwrap())
    });
    group.finish();
}

fn attribution(c: &mut Criterion) {
    let model = hybrid(TemplateId::T9, 2, 1);
    let peptide = nine_mer(5);
    c.bench_function("attrib/ig_32_steps", |b| {
        b.iter(|| integrated_gradients(black_box(&model), &peptide, 32).unwrap())
    });
}

criterion_group!(benches, statevector, model_passes, noisy_execution, attribution);
criterion_main!(benches);
