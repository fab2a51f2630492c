//! Seed derivation. Every stochastic routine takes a `u64` seed; child seeds
//! are derived by mixing so that stages and candidates get independent
//! streams without sharing RNG state.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from a parent and a path of integer labels.
pub fn derive(parent: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix(parent), |acc, &p| mix(acc ^ mix(p)))
}

/// Derive a child seed from a parent and a stage name.
pub fn named(parent: u64, name: &str) -> u64 {
    // FNV-1a
    let h = name.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    });
    derive(parent, &[h])
}

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
