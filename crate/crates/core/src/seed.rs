//! Deterministic seed derivation.
//!
//! Every random stream in the crate is derived from one master seed and a
//! path of integer tags (replicate, pair, condition, ...). Derivation is a
//! fixed SplitMix64-style mix, so a single replicate can be reproduced in
//! isolation and results never depend on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from `parent` and a tag.
pub fn derive(parent: u64, tag: u64) -> u64 {
    mix(parent.wrapping_add(GOLDEN).rotate_left(17) ^ mix(tag.wrapping_add(GOLDEN)))
}

/// Derive along a whole tag path.
pub fn derive_path(parent: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(parent, |s, &t| derive(s, t))
}

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Named tags used across modules, so unrelated streams never collide.
pub mod tag {
    pub const DATA: u64 = 1;
    pub const NULL_PAIR: u64 = 2;
    pub const ALT_PAIR: u64 = 3;
    pub const FIT: u64 = 4;
    pub const OOS: u64 = 5;
    pub const CONDITION: u64 = 6;
    pub const TRIAL: u64 = 7;
    pub const HOLDOUT: u64 = 8;
    pub const RESTART: u64 = 9;
}
