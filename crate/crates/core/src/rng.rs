//! Deterministic random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 generator addressed by
//! `(seed, domain, index)`. The seed and domain select the key, the index selects
//! the 64-bit ChaCha stream. Two calls with the same address always yield the
//! same sequence, no matter which thread makes them or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream domains, one per consumer, so that components never share draws.
pub mod domain {
    pub const ENSEMBLE: u64 = 0x01;
    pub const ENSEMBLE_INIT: u64 = 0x02;
    pub const PANEL_INIT: u64 = 0x10;
    pub const PANEL_STEP: u64 = 0x11;
    pub const PANEL_ENTRY: u64 = 0x12;
    pub const SAMPLES: u64 = 0x20;
    pub const REPLICA: u64 = 0x30;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mix several words into one, order-sensitive.
pub fn mix(words: &[u64]) -> u64 {
    words
        .iter()
        .fold(0x6A09_E667_F3BC_C908, |acc, &w| splitmix64(acc ^ splitmix64(w)))
}

/// Generator for the stream addressed by `(seed, domain, index)`.
pub fn stream(seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(&[seed, domain]));
    rng.set_stream(index);
    rng
}
