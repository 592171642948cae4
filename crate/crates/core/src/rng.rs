//! Deterministic random number generation.
//!
//! Every randomized routine in this crate takes an explicit 64-bit seed and
//! derives per-stream seeds with [`derive_seed`], so replicate loops can run
//! in parallel and still produce bitwise-identical results regardless of
//! thread count. The generator is SplitMix64 (Steele, Lea & Flood 2014):
//! a counter-based generator whose state update is a single add, with all
//! mixing in the output function.

use crate::normal::normal_quantile_unchecked;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const STREAM_SALT: u64 = 0xD1B5_4A32_D192_ED03;

/// SplitMix64 output mixing function (a bijection on u64).
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed for sub-stream `stream` of a parent seed.
///
/// Distinct streams of the same parent map to distinct seeds (the stream
/// transform is a bijection prior to mixing). Nested derivation
/// `derive_seed(derive_seed(s, a), b)` is the documented scheme for
/// replicate/attempt hierarchies: `seed_r = derive_seed(seed, r)`.
#[inline]
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    mix64(seed ^ stream.wrapping_mul(GOLDEN).wrapping_add(STREAM_SALT))
}

/// SplitMix64 generator.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix64(self.state)
    }

    /// Uniform draw in [0, 1) with 53 random mantissa bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw from `0..bound`. Uses rejection to avoid modulo bias.
    #[inline]
    pub fn next_range(&mut self, bound: u64) -> u64 {
        assert!(bound > 0);
        let zone = u64::MAX - (u64::MAX % bound);
        loop {
            let v = self.next_u64();
            if v < zone {
                return v % bound;
            }
        }
    }

    #[inline]
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }

    /// Exponential draw with the given mean, by inverse transform.
    #[inline]
    pub fn exponential(&mut self, mean: f64) -> f64 {
        let u = self.next_f64();
        -mean * (1.0 - u).ln()
    }

    /// Standard normal draw by inverse transform through the normal quantile.
    #[inline]
    pub fn standard_normal(&mut self) -> f64 {
        // next_f64 is in [0, 1); shift to (0, 1) to keep the quantile finite.
        let u = (self.next_u64() >> 11) as f64;
        normal_quantile_unchecked((u + 0.5) * (1.0 / (1u64 << 53) as f64))
    }
}
