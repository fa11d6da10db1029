//! Counter-based random streams.
//!
//! Every random quantity is drawn from a ChaCha8 stream selected by a
//! `(seed, counter)` pair, so any draw can be replayed on its own and
//! parallel workers never need to share generator state.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Domain-separation tags for [`mix_seed`].
pub mod tags {
    pub const DATA_STREAM: u64 = 0x01;
    pub const POOL: u64 = 0x02;
    pub const INIT_FIRST: u64 = 0x03;
    pub const INIT_SECOND: u64 = 0x04;
    pub const INIT_THIRD: u64 = 0x05;
    pub const TEACHER: u64 = 0x06;
    pub const NOISE: u64 = 0x07;
    pub const DROPOUT: u64 = 0x08;
    pub const EMBEDDING: u64 = 0x09;
    pub const PATH_SPLIT: u64 = 0x0a;
    pub const PARTNER: u64 = 0x0b;
}

/// SplitMix64 finaliser.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent seed for a purpose identified by `tag`.
pub fn mix_seed(seed: u64, tag: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ tag.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// Generator for draw number `counter` under `seed`.
pub fn counter_rng(seed: u64, counter: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(counter);
    rng
}
