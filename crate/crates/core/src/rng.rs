//! Deterministic seed derivation.
//!
//! Every stochastic consumer in a run (weight init per stack, batch
//! shuffling, dropout per stack, Laplace noise, probe training, ...) gets its
//! own ChaCha stream derived from the run seed and a fixed tag. Keeping the
//! streams separate means that adding or removing one consumer (e.g. the
//! adversary branch in a baseline mode) cannot shift the draws seen by the
//! others, which is what makes mode-equivalence checks exact.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags for the independent RNG streams of a training run.
pub mod tag {
    pub const INIT_ENCODER: u64 = 1;
    pub const INIT_CLASSIFIER: u64 = 2;
    pub const INIT_ADVERSARY: u64 = 3;
    pub const SHUFFLE: u64 = 4;
    pub const DROPOUT_ENCODER: u64 = 5;
    pub const DROPOUT_CLASSIFIER: u64 = 6;
    pub const DROPOUT_ADVERSARY: u64 = 7;
    pub const NOISE: u64 = 8;
    pub const EVAL_NOISE: u64 = 9;
    pub const LEAKAGE_PROBE: u64 = 10;
    pub const MDL: u64 = 11;
    pub const RANDOM_BASELINE: u64 = 12;
}

/// splitmix64 finalizer; decorrelates nearby (seed, tag) pairs.
fn mix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Derives a child seed from a base seed and a stream tag.
pub fn derive_seed(base: u64, tag: u64) -> u64 {
    mix(base ^ mix(tag))
}

/// A ChaCha stream for `(base, tag)`; same inputs, same stream.
pub fn stream(base: u64, tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, tag))
}
