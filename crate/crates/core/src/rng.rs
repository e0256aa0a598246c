//! Seed derivation.
//!
//! All randomness flows from a single 64-bit seed through named substreams:
//! `substream(seed, "sketch/parity", trial)` is independent of every other
//! (label, index) pair, so Monte-Carlo trials can be partitioned across
//! workers without sharing generator state.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic RNG for the substream `(label, index)` of `seed`.
pub fn substream(seed: u64, label: &str, index: u64) -> ChaCha8Rng {
    let mut h = splitmix64(seed ^ 0x6c62_272e_07bb_0142);
    for &b in label.as_bytes() {
        h = splitmix64(h ^ u64::from(b));
    }
    h = splitmix64(h ^ index);
    ChaCha8Rng::seed_from_u64(h)
}
