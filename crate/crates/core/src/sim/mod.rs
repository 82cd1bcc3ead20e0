//! Dense statevector simulation.
//!
//! Basis states are indexed so qubit `q` is bit `q` of the index (qubit 0 is
//! the least significant bit). A circuit is an ordered gate list; gate `t` of
//! `[g_1, ..., g_T]` acts as the matrix `U_t` in `U_T ... U_2 U_1 |0...0>`.

mod adjoint;
mod circuit;
mod gate;
mod kernel;
mod sampling;
mod state;

pub use adjoint::{backward, backward_from, Cotangent};
pub use circuit::{apply_gate, bind, Circuit};
pub use gate::{Gate, GateKind};
pub use sampling::{counts_expectation_z, sample_counts, sample_one};
pub use state::{QuantumState, MAX_QUBITS, MIN_QUBITS};
