//! Deterministic pseudo-random numbers for seeded fixtures.
//!
//! SplitMix64 is used instead of an external generator because seeded model
//! families and acceptance fixtures must reproduce bit-identically across
//! platforms and dependency upgrades; the algorithm is fixed here forever.

use crate::fp;

/// SplitMix64 generator (public-domain algorithm by Sebastiano Vigna).
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform sample in `[0, 1)` with 53 random mantissa bits.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform sample in `[lo, hi)`.
    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Standard normal sample via Box–Muller.
    pub fn normal(&mut self) -> f64 {
        let mut u = self.uniform();
        if u <= 0.0 {
            u = f64::MIN_POSITIVE;
        }
        let v = self.uniform();
        fp::sqrt(-2.0 * fp::ln(u)) * fp::cos(fp::TAU * v)
    }
}
