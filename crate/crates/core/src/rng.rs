//! Deterministic random number generation.
//!
//! Every randomized operation in this crate (corpus splits, synthetic
//! generation, noise injection, weight init, batch shuffling, dropout)
//! draws from [`SeededRng`], a thin wrapper over the ChaCha8 stream
//! cipher RNG. ChaCha8 is a named, portable algorithm: the same seed
//! produces the same stream on every platform, so experiments are
//! reproducible from a single integer.
//!
//! Sub-streams are derived with [`derive_seed`], a splitmix64 mix of the
//! parent seed and a stream tag. The tags used by each stage are
//! documented where they are declared.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Seeded RNG with the handful of draw primitives the crate needs.
pub struct SeededRng(ChaCha8Rng);

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        SeededRng(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform f64 in [0, 1) using the top 53 bits of one u64 draw.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in [0, n). Modulo draw; the bias for desk-scale n
    /// (n << 2^64) is far below anything observable.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below() requires n > 0");
        (self.next_u64() % n as u64) as usize
    }

    /// In-place Fisher-Yates shuffle, iterating from the last index down.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }

    /// Standard normal via Box-Muller; uses two uniform draws per call
    /// and discards the second variate of the pair.
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform(); // (0, 1]
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}

/// Derive a child seed for a named sub-stream (splitmix64 finalizer over
/// the parent seed xor a multiplied stream tag).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ (stream.wrapping_add(1)).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
