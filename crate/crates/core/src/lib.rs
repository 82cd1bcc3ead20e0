//! Simulator-backed library for hybrid quantum/classical peptide binding
//! classifiers: dense statevector simulation with reverse-mode gradients,
//! layered ansatz circuits driven by per-residue angles, classical recurrent
//! baselines, a binding-affinity data pipeline, shot-based noise emulation
//! with zero-noise extrapolation, and per-position attribution.

pub mod ansatz;
pub mod attrib;
pub mod baselines;
pub mod compile;
pub mod data;
pub mod error;
pub mod model;
pub mod noise;
pub mod rng;
pub mod sim;
pub mod train;

pub use error::{Error, Result};
