//! Order-independent sub-seed derivation.
//!
//! Every random draw is keyed by a hash of `(master seed, scenario, index)` so
//! that sweeps produce identical numbers no matter how work is scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::resample::Scenario;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// Small stable hasher: FNV-1a over the input bytes, finished with the
/// SplitMix64 mixer. Unlike `core::hash::Hasher` implementations it is fixed
/// across platforms and releases.
#[derive(Debug, Clone)]
pub struct SeedHasher(u64);

impl Default for SeedHasher {
    fn default() -> Self {
        Self(FNV_OFFSET)
    }
}

impl SeedHasher {
    pub fn new(master: u64) -> Self {
        let mut h = Self::default();
        h.write_u64(master);
        h
    }

    pub fn write_bytes(&mut self, bytes: &[u8]) -> &mut Self {
        for b in bytes {
            self.0 ^= u64::from(*b);
            self.0 = self.0.wrapping_mul(FNV_PRIME);
        }
        self
    }

    pub fn write_u64(&mut self, v: u64) -> &mut Self {
        self.write_bytes(&v.to_le_bytes())
    }

    /// Length-prefixed so that `("ab", "c")` and `("a", "bc")` differ.
    pub fn write_str(&mut self, s: &str) -> &mut Self {
        self.write_u64(s.len() as u64);
        self.write_bytes(s.as_bytes())
    }

    pub fn finish(&self) -> u64 {
        splitmix64(self.0)
    }
}

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for draw `index` of `scenario`.
pub fn draw_seed(master: u64, scenario: &Scenario, index: u64) -> u64 {
    SeedHasher::new(master)
        .write_str(&scenario.column)
        .write_str(&scenario.value.label())
        .write_u64(scenario.fraction.to_bits())
        .write_u64(index)
        .finish()
}

/// Seed that identifies one (column, value) scenario inside a sweep.
pub fn scenario_seed(master: u64, column: &str, value_label: &str) -> u64 {
    SeedHasher::new(master)
        .write_str("scenario")
        .write_str(column)
        .write_str(value_label)
        .finish()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
