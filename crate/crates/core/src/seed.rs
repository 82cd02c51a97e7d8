//! Deterministic seed derivation.
//!
//! Every randomized component takes a `u64` seed; independent streams are
//! derived by mixing a parent seed with small integer labels so that any part
//! of a run can be recomputed in isolation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used throughout the crate.
pub type SimRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

// splitmix64 finalizer
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hash a parent seed together with a path of labels into a child seed.
pub fn derive_seed(parent: u64, labels: &[u64]) -> u64 {
    labels
        .iter()
        .fold(mix(parent), |acc, &label| mix(acc ^ mix(label)))
}

pub fn derive_rng(parent: u64, labels: &[u64]) -> SimRng {
    rng_from_seed(derive_seed(parent, labels))
}
