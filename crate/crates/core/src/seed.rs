//! Deterministic seed derivation.
//!
//! Every parallel unit of work (tree, query, benchmark cell) gets its own
//! generator seeded from `(master, index)`, so serial and parallel runs
//! consume identical random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used throughout the crate. ChaCha8 keeps streams stable
/// across platforms and `rand` releases.
pub type Rng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a master seed with a path of indices into a child seed.
pub fn derive(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(master), |acc, &i| splitmix64(acc ^ splitmix64(i.wrapping_add(1))))
}

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn child_rng(master: u64, path: &[u64]) -> Rng {
    rng(derive(master, path))
}
