//! Seeded random streams.
//!
//! Every random decision in a generation run flows from one 64-bit master
//! seed. Each object gets its own stream derived from `(master_seed,
//! object_index)` through [`object_seed`], and each pipeline stage forks a
//! named sub-stream from the object seed so that adding draws to one stage
//! never shifts the draws of another.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 64-bit FNV-1a over a byte string.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Seed of the stream used for object `index` of a run seeded with `master`:
/// `splitmix64(master ^ splitmix64(index))`.
pub fn object_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index))
}

/// A reproducible random stream (ChaCha8 keyed by a 64-bit seed).
#[derive(Clone, Debug)]
pub struct SeededStream {
    seed: u64,
    rng: ChaCha8Rng,
}

impl SeededStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn for_object(master: u64, index: u64) -> Self {
        Self::new(object_seed(master, index))
    }

    /// Seed this stream was created from.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent sub-stream named `tag`. Depends only on this stream's seed,
    /// not on how many values have been drawn from it.
    pub fn fork(&self, tag: &str) -> Self {
        Self::new(splitmix64(self.seed ^ fnv1a64(tag.as_bytes())))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform double in `[0, 1)` with 53 bits of precision.
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform double in `[lo, hi]`; returns `lo` when the range is empty.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        let u = self.unit();
        if hi <= lo {
            return lo;
        }
        lo + (hi - lo) * u
    }

    /// Uniform integer in `[lo, hi]` (inclusive). Always consumes one draw.
    pub fn int_inclusive(&mut self, lo: u32, hi: u32) -> u32 {
        let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
        self.rng.random_range(lo..=hi)
    }

    /// Uniform index in `[0, n)`. `n` must be positive.
    pub fn index(&mut self, n: usize) -> usize {
        assert!(n > 0, "index() over an empty range");
        self.rng.random_range(0..n)
    }

    /// Bernoulli trial; consumes exactly one draw even when `p` is 0 or 1.
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.unit() < p
    }
}
