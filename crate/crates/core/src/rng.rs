//! Seeded, splittable randomness.
//!
//! Every random stream is a ChaCha8 generator keyed by `(seed, stream)`;
//! normals come from `rand_distr::StandardNormal` (ziggurat). Identical
//! `(seed, stream)` pairs produce identical draws on every platform.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type AttackRng = ChaCha8Rng;

pub fn seeded(seed: u64, stream: u64) -> AttackRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derives an independent child seed, e.g. one per campaign item.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    seeded(seed, stream.wrapping_add(1)).next_u64()
}
