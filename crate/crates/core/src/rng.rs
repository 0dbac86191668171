//! Seed derivation for independent, order-free random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 generator keyed by a
//! 64-bit value derived from a tuple of integers (master seed, cell, run,
//! replicate, attempt, ...). Streams therefore do not depend on the order in
//! which work items are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a path of integers into one seed.
pub fn derive_seed(root: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(root), |acc, &p| splitmix64(acc.rotate_left(17) ^ splitmix64(p)))
}

pub fn stream(root: u64, path: &[u64]) -> StreamRng {
    ChaCha8Rng::seed_from_u64(derive_seed(root, path))
}
