//! Reproducible random streams.
//!
//! Replicate `i` of a run seeded with `seed` draws from a ChaCha8 generator
//! keyed by `splitmix64(seed ^ i * 0x9E3779B97F4A7C15)`, so results depend only
//! on `(seed, i)` and never on how replicates are scheduled across workers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Golden-ratio increment used by splitmix64.
pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Random stream consumed by every sampler in this crate.
pub type Stream = ChaCha8Rng;

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream key for replicate `index` of a run seeded with `seed`.
#[inline]
pub fn stream_key(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ index.wrapping_mul(GOLDEN_GAMMA))
}

pub fn stream(seed: u64, index: u64) -> Stream {
    ChaCha8Rng::seed_from_u64(stream_key(seed, index))
}

/// Derives a sub-seed from a seed and a text label (FNV-1a, then splitmix64).
pub fn labelled_seed(seed: u64, label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    splitmix64(seed ^ h)
}
