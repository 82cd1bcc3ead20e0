use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sim::state::QuantumState;

/// Draws `shots` basis-state samples from |amps|^2 and returns a histogram
/// indexed by basis state. Inverse-CDF sampling from the given generator, so
/// a fixed rng state gives a fixed histogram.
pub fn sample_counts(state: &QuantumState, shots: u64, rng: &mut ChaCha8Rng) -> Result<Vec<u64>> {
    if shots == 0 {
        return Err(Error::ZeroShots);
    }
    let mut cumulative = Vec::with_capacity(state.amps().len());
    let mut acc = 0.0;
    for amp in state.amps() {
        acc += amp.norm_sqr();
        cumulative.push(acc);
    }
    let total = acc;
    let mut counts = vec![0u64; state.amps().len()];
    for _ in 0..shots {
        let u: f64 = rng.gen::<f64>() * total;
        let idx = cumulative.partition_point(|&c| c <= u).min(counts.len() - 1);
        counts[idx] += 1;
    }
    Ok(counts)
}

/// <Z_q> estimated from a basis-state histogram.
pub fn counts_expectation_z(counts: &[u64], qubit: usize) -> Result<f64> {
    let mask = 1usize << qubit;
    if mask >= counts.len() {
        return Err(Error::QubitOutOfRange { index: qubit, n: counts.len().trailing_zeros() as usize });
    }
    let mut up = 0u64;
    let mut down = 0u64;
    for (k, &c) in counts.iter().enumerate() {
        if k & mask == 0 {
            up += c;
        } else {
            down += c;
        }
    }
    let total = up + down;
    if total == 0 {
        return Err(Error::ZeroShots);
    }
    Ok((up as f64 - down as f64) / total as f64)
}

/// Draws one basis state from |amps|^2.
pub fn sample_one(state: &QuantumState, rng: &mut ChaCha8Rng) -> usize {
    let amps = state.amps();
    let total: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
    let u: f64 = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    for (k, amp) in amps.iter().enumerate() {
        acc += amp.norm_sqr();
        if u < acc {
            return k;
        }
    }
    amps.len() - 1
}
