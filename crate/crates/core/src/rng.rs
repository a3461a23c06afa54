//! Seed derivation.
//!
//! A run is driven by one user seed. Each stage (split, partition, client
//! selection, adversary draws) gets its own stream derived from that seed and
//! a stage tag, so changing one stage's parameters never shifts another
//! stage's random draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const STAGE_SPLIT: u64 = 0x5350_4c49;
pub const STAGE_PARTITION: u64 = 0x5041_5254;
pub const STAGE_SELECT: u64 = 0x5345_4c45;
pub const STAGE_ADVERSARY: u64 = 0x4144_5645;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes `tags` into `base`. Order of tags matters.
pub fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(splitmix64(base), |acc, &t| splitmix64(acc ^ splitmix64(t)))
}

pub fn stream(base: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, tags))
}

/// `⌊count · frac⌋`, tolerant of products like `0.29 * 100 = 28.999…`.
pub fn floor_fraction(count: usize, frac: f64) -> usize {
    (count as f64 * frac + 1e-9).floor().max(0.0) as usize
}

/// `⌈count · frac⌉` with the same tolerance.
pub fn ceil_fraction(count: usize, frac: f64) -> usize {
    (count as f64 * frac - 1e-9).ceil().max(0.0) as usize
}
