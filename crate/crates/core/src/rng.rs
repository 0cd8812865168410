//! Seed derivation for the keyed random streams used across the toolkit.
//!
//! Every random draw comes from a [`ChaCha8Rng`], whose output is fixed by its
//! algorithm and therefore identical on every platform. Independent streams
//! are keyed by hashing `(seed, tag, indices...)` with SplitMix64, so work can
//! be scheduled in any order without changing results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream tags. Keeping them in one place avoids accidental stream reuse.
pub mod tag {
    pub const SPLIT: u64 = 0x5350_4c49;
    pub const INIT: u64 = 0x494e_4954;
    pub const WALK: u64 = 0x5741_4c4b;
    pub const NEGATIVE: u64 = 0x4e45_4741;
    pub const AUX_ORDER: u64 = 0x4155_584f;
    pub const SAMPLING_MOD: u64 = 0x5341_4d50;
    pub const MLP: u64 = 0x4d4c_5030;
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a base seed with a sequence of keys into a single 64-bit seed.
pub fn derive_seed(seed: u64, keys: &[u64]) -> u64 {
    keys.iter()
        .fold(splitmix64(seed), |acc, &k| splitmix64(acc ^ splitmix64(k)))
}

pub fn keyed_rng(seed: u64, keys: &[u64]) -> Rng {
    Rng::seed_from_u64(derive_seed(seed, keys))
}
