//! Counter-based random streams.
//!
//! Every random quantity is drawn from a generator keyed by
//! `(seed, purpose, index...)`, so work can be split across threads in any
//! order without changing a single draw.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purposes, kept distinct so streams never overlap.
pub mod purpose {
    pub const CORPUS: u64 = 1;
    pub const SIGNS: u64 = 2;
    pub const VECTORS: u64 = 3;
    pub const SUBFAMILY: u64 = 4;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for the stream labelled by `labels` under `seed`.
pub fn stream(seed: u64, labels: &[u64]) -> ChaCha8Rng {
    let mut h = splitmix64(seed);
    for &l in labels {
        h = splitmix64(h ^ splitmix64(l.wrapping_add(0x632B_E59B_D9B4_E019)));
    }
    ChaCha8Rng::seed_from_u64(h)
}
