//! Seed derivation. Every random stream in a run is keyed by
//! `derive_seed(run_seed, &[scene_index, record_index, stream])`, so results do
//! not depend on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream tags keep independent consumers of the same record apart.
pub mod stream {
    pub const SCENE: u64 = 1;
    pub const DESCRIPTION: u64 = 2;
    pub const DETECTOR: u64 = 3;
    pub const CROP: u64 = 4;
    pub const NOISE: u64 = 5;
    pub const SEGMENT: u64 = 6;
    pub const PLANE: u64 = 7;
    pub const STRATEGY: u64 = 8;
    pub const TUNE: u64 = 9;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(base), |h, p| splitmix64(h ^ splitmix64(*p)))
}

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn derived_rng(base: u64, parts: &[u64]) -> Rng {
    rng(derive_seed(base, parts))
}
