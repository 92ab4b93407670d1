//! Counter-based random stream used for bootstrap resampling.
//!
//! Generator `volmo-ctr-v1`: every draw is a pure function of
//! `(seed, replicate, draw)`, so replicates can be evaluated in any order, on
//! any thread, and by any implementation that follows the same definition:
//!
//! ```text
//! mix(z)  = splitmix64 finalizer:
//!           z ^= z >> 30; z *= 0xbf58476d1ce4e5b9;
//!           z ^= z >> 27; z *= 0x94d049bb133111eb;
//!           z ^= z >> 31
//! word    = mix( mix( mix(seed) ^ (replicate + 1) * 0x9e3779b97f4a7c15 )
//!                ^ (draw + 1) * 0xd1b54a32d192ed03 )
//! index   = (word * n) >> 64          (128-bit product)
//! ```
//!
//! All arithmetic is wrapping on u64.

/// Identifier recorded alongside any schedule produced with this generator.
pub const GENERATOR_ID: &str = "volmo-ctr-v1";

const REPLICATE_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;
const DRAW_GAMMA: u64 = 0xd1b5_4a32_d192_ed03;

#[inline]
fn mix(mut z: u64) -> u64 {
    z ^= z >> 30;
    z = z.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z ^= z >> 27;
    z = z.wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stateless counter-based generator keyed by a seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterRng {
    key: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        Self { key: mix(seed) }
    }

    /// Raw 64-bit word for `(replicate, draw)`.
    #[inline]
    pub fn word(&self, replicate: u64, draw: u64) -> u64 {
        let r = mix(self.key ^ replicate.wrapping_add(1).wrapping_mul(REPLICATE_GAMMA));
        mix(r ^ draw.wrapping_add(1).wrapping_mul(DRAW_GAMMA))
    }

    /// Index in `0..n` for `(replicate, draw)`. `n` must be positive.
    #[inline]
    pub fn index(&self, replicate: u64, draw: u64, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.word(replicate, draw) as u128 * n as u128) >> 64) as usize
    }

    /// Uniform real in `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn unit(&self, replicate: u64, draw: u64) -> f64 {
        (self.word(replicate, draw) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}
