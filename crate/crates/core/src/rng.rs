//! Seeded, platform-independent random numbers.

use rand::seq::SliceRandom;
use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::tensor::Tensor;

#[derive(Debug, Clone)]
pub struct Rng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.inner.gen::<f64>()
    }

    /// Uniform integer in `[0, n)`.
    pub fn below(&mut self, n: u32) -> u32 {
        self.inner.gen_range(0..n)
    }

    /// Uniform integer in `[lo, hi]`.
    pub fn range_inclusive(&mut self, lo: i32, hi: i32) -> i32 {
        self.inner.gen_range(lo..=hi)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.gen()
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        items.shuffle(&mut self.inner);
    }

    /// Tensor with entries uniform in `[-s, s]`.
    pub fn uniform_tensor(&mut self, shape: &[usize], s: f64) -> Tensor {
        Tensor::from_fn(shape, |_| self.uniform(-s, s))
    }

    /// Glorot-uniform initialization, `s = sqrt(6 / (fan_in + fan_out))`.
    pub fn glorot(&mut self, shape: &[usize], fan_in: usize, fan_out: usize) -> Tensor {
        let s = libm::sqrt(6.0 / (fan_in + fan_out) as f64);
        self.uniform_tensor(shape, s)
    }
}

/// Mixes a master seed with a stream tag into an independent child seed.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    // splitmix64 finalizer over the combined word
    let mut z = master ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
