//! Portable, seedable random stream.
//!
//! Every stochastic routine in this crate draws from [`PortableRng`]: the
//! xoshiro256** generator with its state expanded from a `u64` seed by
//! SplitMix64. Derived quantities (bounded integers, unit floats, normal
//! deviates) are computed here with fixed formulas so that a given seed
//! yields the same stream on every platform and in any port that follows
//! the same recipe:
//!
//! * `index(n)`: `(next_u64 as u128 * n as u128) >> 64`
//! * `unit()`: `(next_u64 >> 11) * 2^-53`, in `[0, 1)`
//! * `normal()`: Box-Muller on `1 - unit()` and `unit()`, cosine branch only
//! * `derive(seed, i)`: SplitMix64 finalizer applied to `seed + (i + 1) * 0x9E3779B97F4A7C15`

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone)]
pub struct PortableRng {
    inner: Xoshiro256StarStar,
}

impl PortableRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: Xoshiro256StarStar::seed_from_u64(seed),
        }
    }

    /// Independent stream number `i` derived from `seed`.
    pub fn derive(seed: u64, i: u64) -> Self {
        Self::new(derive_seed(seed, i))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform integer in `0..n`. `n` must be positive.
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    /// Uniform float in `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal deviate.
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.unit();
        let u2 = self.unit();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

pub fn derive_seed(seed: u64, i: u64) -> u64 {
    let mut z = seed.wrapping_add(i.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
