use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sim::kernel;

pub const MIN_QUBITS: usize = 1;
pub const MAX_QUBITS: usize = 12;

/// Dense statevector over `n` qubits. Qubit `q` is bit `q` of the basis
/// index, so `amps[5]` of a 3-qubit state is |101> read as qubits (2,1,0).
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState {
    n: usize,
    amps: Vec<Complex64>,
}

impl QuantumState {
    /// |0...0> on `n` qubits.
    pub fn zero(n: usize) -> Result<Self> {
        check_qubit_count(n)?;
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(QuantumState { n, amps })
    }

    /// Wraps an explicit amplitude vector; the length must be a supported
    /// power of two. Intended for tests and reference checks — normalization
    /// is the caller's business.
    pub fn from_amps(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if !len.is_power_of_two() {
            return Err(Error::LengthMismatch { expected: len.next_power_of_two(), got: len });
        }
        let n = len.trailing_zeros() as usize;
        check_qubit_count(n)?;
        Ok(QuantumState { n, amps })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub(crate) fn amps_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probability(&self, basis: usize) -> f64 {
        self.amps[basis].norm_sqr()
    }

    /// <Z_q> = P(bit q = 0) - P(bit q = 1).
    pub fn expectation_z(&self, qubit: usize) -> Result<f64> {
        if qubit >= self.n {
            return Err(Error::QubitOutOfRange { index: qubit, n: self.n });
        }
        let mask = 1usize << qubit;
        let mut z = 0.0;
        for (k, amp) in self.amps.iter().enumerate() {
            let p = amp.norm_sqr();
            z += if k & mask == 0 { p } else { -p };
        }
        Ok(z)
    }

    /// All single-qubit Z expectations, qubit 0 first.
    pub fn expectations_z(&self) -> Vec<f64> {
        (0..self.n).map(|q| self.expectation_z(q).unwrap()).collect()
    }

    pub(crate) fn apply_pauli_x(&mut self, qubit: usize) {
        kernel::apply_pauli_x(&mut self.amps, qubit);
    }

    pub(crate) fn apply_pauli_y(&mut self, qubit: usize) {
        kernel::apply_pauli_y(&mut self.amps, qubit);
    }

    pub(crate) fn apply_pauli_z(&mut self, qubit: usize) {
        kernel::apply_pauli_z(&mut self.amps, qubit);
    }
}

pub(crate) fn check_qubit_count(n: usize) -> Result<()> {
    if !(MIN_QUBITS..=MAX_QUBITS).contains(&n) {
        return Err(Error::QubitCountUnsupported { n, min: MIN_QUBITS, max: MAX_QUBITS });
    }
    Ok(())
}
