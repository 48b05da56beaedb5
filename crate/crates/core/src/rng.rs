//! Seed derivation. Every random stream in the crate is a ChaCha8 generator
//! keyed by a 64-bit seed mixed from a parent seed and a stream label.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream labels. Distinct labels give statistically independent streams.
pub mod stream {
    pub const INIT: u64 = 0x494e_4954;
    pub const SHUFFLE: u64 = 0x5348_5546;
    pub const MEMBER: u64 = 0x4d45_4d42;
    pub const STUDENT: u64 = 0x5354_5544;
    pub const FINETUNE: u64 = 0x4649_4e45;
    pub const SAMPLE: u64 = 0x5341_4d50;
    pub const SENSORS: u64 = 0x5345_4e53;
    pub const SUBSET: u64 = 0x5355_4253;
    pub const UNLABELED: u64 = 0x554e_4c42;
}

/// SplitMix64 finaliser.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Combines a parent seed with a stream label and an index.
pub fn derive(seed: u64, label: u64, index: u64) -> u64 {
    mix(mix(mix(seed) ^ label) ^ index)
}

pub fn rng_for(seed: u64, label: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(seed, label, index))
}
