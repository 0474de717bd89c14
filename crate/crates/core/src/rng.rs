//! Seeded randomness.
//!
//! Every stochastic draw uses ChaCha20 (`rand_chacha::ChaCha20Rng`) seeded
//! through `seed_from_u64`. Per-setting streams use
//!
//! ```text
//! setting_seed(master, l, m) = splitmix64(master ^ splitmix64((l << 32) | m))
//! ```
//!
//! so each `(l, m)` stream is independent of evaluation order.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// SplitMix64 finalizer (Steele, Lea & Flood).
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn setting_seed(master: u64, l: usize, m: usize) -> u64 {
    let tag = ((l as u64) << 32) | (m as u64 & 0xFFFF_FFFF);
    splitmix64(master ^ splitmix64(tag))
}

pub fn rng_from_seed(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}
