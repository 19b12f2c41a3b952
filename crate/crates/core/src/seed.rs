//! Seed derivation for reproducible Monte-Carlo runs.
//!
//! A run has one master seed. Every random object (trial, matrix, fold
//! assignment) gets its own generator seeded by hashing the master seed
//! together with a path of integer labels, so results never depend on the
//! order in which threads pick up work.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream labels for the different consumers of randomness inside a trial.
pub mod stream {
    pub const MATRIX: u64 = 1;
    pub const SUPPORT: u64 = 2;
    pub const NOISE: u64 = 3;
    pub const FOLDS: u64 = 4;
    pub const GROSS_ERROR: u64 = 5;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `master` and a path of labels.
///
/// `derive(s, &[a, b])` is `h(h(s, a), b)` with `h(s, x) = splitmix64(s ^ splitmix64(x))`,
/// a counter-based construction: the same path always yields the same seed.
pub fn derive(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(master), |acc, &label| {
        splitmix64(acc ^ splitmix64(label))
    })
}

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rng_for(master: u64, path: &[u64]) -> Rng {
    rng(derive(master, path))
}
