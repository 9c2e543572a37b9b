//! Keyed randomness streams.
//!
//! Every random decision in the crate draws from a ChaCha stream whose seed is
//! derived from a master seed plus a tuple of tags (round, client id, purpose).
//! Two computations that use the same key see the same bits no matter which
//! thread runs them or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub mod tag {
    pub const INIT: u64 = 0x1000;
    pub const SELECT: u64 = 0x2000;
    pub const CLIENT_ROUND: u64 = 0x3000;
    pub const CLIENT_SUBSET: u64 = 0x3100;
    pub const TRAIN_DATA: u64 = 0x4000;
    pub const TEST_DATA: u64 = 0x4100;
    pub const CLASS_MEANS: u64 = 0x4200;
    pub const PARTITION: u64 = 0x5000;
    pub const SHUFFLE: u64 = 0x5100;
    pub const ATTACKERS: u64 = 0x6000;
    pub const MONTE_CARLO: u64 = 0x7000;
    pub const CERTIFY: u64 = 0x7100;
    pub const BOUND_W: u64 = 0x8000;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive the seed for the stream keyed by `(seed, tags...)`.
pub fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(splitmix64(seed), |acc, &t| splitmix64(acc ^ splitmix64(t.wrapping_add(0x632b_e59b_d9b4_e019))))
}

pub fn stream(seed: u64, tags: &[u64]) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(seed, tags))
}
