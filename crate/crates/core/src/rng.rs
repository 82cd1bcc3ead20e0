//! Seeded random number streams.
//!
//! Every stochastic component draws from a ChaCha stream addressed by a
//! `(seed, stream)` pair, so parallel work can hand each unit (trajectory,
//! restart, permutation) its own stream and produce results independent of
//! thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator for stream `stream` of the root seed.
pub fn seeded_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Mixes `tag` into `seed` to derive an unrelated child seed, so nested
/// components (e.g. per-circuit noise inside a sweep) get disjoint stream
/// families. SplitMix64 finalizer.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
