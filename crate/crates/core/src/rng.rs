//! Reproducible random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 generator keyed by the
//! master seed, with the 64-bit ChaCha stream id derived from a list of
//! integer labels (experiment tag, sample-size index, replicate, purpose, ...).
//! ChaCha is counter based, so distinct stream ids give independent,
//! non-overlapping sequences regardless of which thread consumes them.
//!
//! Stream ids are produced by folding the labels through the SplitMix64
//! finaliser; the fold is order sensitive.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Purpose labels, kept distinct so different uses never share a stream.
pub mod purpose {
    pub const REGRESSORS: u64 = 1;
    pub const RESPONSE: u64 = 2;
    pub const SERIES: u64 = 3;
    pub const XI: u64 = 4;
    pub const SMALL_BALL: u64 = 5;
    pub const REPLICATE: u64 = 6;
    pub const NOISE: u64 = 7;
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds `labels` into a stream id.
pub fn stream_id(labels: &[u64]) -> u64 {
    labels
        .iter()
        .fold(0x6a09_e667_f3bc_c908, |acc, &l| splitmix64(acc ^ splitmix64(l)))
}

/// Generator for `(seed, labels)`.
pub fn stream(seed: u64, labels: &[u64]) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(labels));
    rng
}

/// A child seed for `(seed, labels)`, used to key nested generators.
pub fn derive_seed(seed: u64, labels: &[u64]) -> u64 {
    use rand::RngCore;
    stream(seed, labels).next_u64()
}
