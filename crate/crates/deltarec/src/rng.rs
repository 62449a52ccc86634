//! Deterministic pseudo-random numbers.
//!
//! The generator is SplitMix64: a 64-bit counter advanced by the golden-ratio
//! increment, pushed through a fixed avalanche mix. It is exactly the same
//! integer arithmetic on every platform, which is what the reproducibility
//! contract of the simulation layer rests on. Replication streams are derived
//! from a master seed with [`RngState::for_stream`], so stream `i` and stream
//! `j` never share state for `i != j`.

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// Finalizer from SplitMix64 (Steele, Lea & Flood 2014).
#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Owned RNG state. One stream per owner; never shared between threads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RngState {
    state: u64,
}

impl RngState {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    /// Derive the RNG for replication `index` of a master seed.
    ///
    /// The derivation double-mixes `master + (index+1) * gamma`, so distinct
    /// indices land in distinct, decorrelated counter positions.
    pub fn for_stream(master_seed: u64, index: u64) -> Self {
        let offset = master_seed.wrapping_add((index.wrapping_add(1)).wrapping_mul(GOLDEN_GAMMA));
        Self {
            state: mix(mix(offset)),
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix(self.state)
    }

    /// Uniform in [0, 1) with 53 random bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}
