//! Deterministic seed derivation.
//!
//! Every random stream in an experiment is keyed by a tuple of integers and
//! derived from the master seed through a chain of bijective 64-bit mixers,
//! so distinct keys never share a stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags separating the independent uses of one replication's seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Data = 1,
    TestSet = 2,
    Mcmc = 3,
}

/// SplitMix64 finalizer; a bijection on u64.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds `keys` into `seed`. For a fixed key length the map from keys to the
/// result is injective for every step, since each step is `mix64(acc ^ k)`
/// preceded by a bijective rotation of the accumulator.
pub fn derive(seed: u64, keys: &[u64]) -> u64 {
    keys.iter().fold(mix64(seed), |acc, &k| {
        mix64(acc.rotate_left(17).wrapping_add(0x9e37_79b9_7f4a_7c15) ^ k)
    })
}

/// Seed of replication `r` at sample size `n`.
///
/// `(n, r)` is packed into one word before mixing, which makes the map
/// injective for `n, r < 2^32`.
pub fn replication_seed(master: u64, n: usize, r: usize) -> u64 {
    let packed = ((n as u64) << 32) | (r as u64 & 0xffff_ffff);
    mix64(mix64(master) ^ mix64(packed))
}

pub fn rng(seed: u64, stream: Stream, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(seed, &[stream as u64, index]))
}
