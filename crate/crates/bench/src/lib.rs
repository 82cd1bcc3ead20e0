//! Shared fixtures for the benchmark targets: seeded circuits, models, and
//! peptides sized like the ones the library runs in production.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qbind_core::ansatz::{AnsatzTemplate, SequenceCircuitSpec, TemplateId};
use qbind_core::data::Peptide;
use qbind_core::model::{HeadKind, HybridModel, QuantumModelSpec};
use qbind_core::sim::Circuit;

/// Fully bound sequence circuit with seeded angles.
pub fn bound_circuit(id: TemplateId, qubits: usize, positions: usize, seed: u64) -> Circuit {
    let template = AnsatzTemplate::new(id, qubits, 1).expect("valid template");
    let spec = SequenceCircuitSpec { template, classifier: None };
    let circuit = spec.build_parametric(positions).expect("valid length");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params: Vec<f64> =
        (0..circuit.num_params()).map(|_| rng.gen::<f64>() * std::f64::consts::TAU).collect();
    qbind_core::sim::bind(&circuit, &params).expect("bindable")
}

/// NN-controlled hybrid model in its initialized state.
pub fn hybrid(id: TemplateId, qubits: usize, seed: u64) -> HybridModel {
    HybridModel::init(
        QuantumModelSpec {
            nn_controlled: true,
            template: id,
            layers: 1,
            qubits,
            head: HeadKind::L1,
            embedding_dim: 10,
            classifier: false,
        },
        seed,
    )
    .expect("valid spec")
}

/// Seeded 9-mer over the full alphabet.
pub fn nine_mer(seed: u64) -> Peptide {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let letters: String = (0..9)
        .map(|_| qbind_core::data::AMINO_ACIDS[rng.gen_range(0..20)] as char)
        .collect();
    Peptide::parse(&letters).expect("alphabet letters only")
}
