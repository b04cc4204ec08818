//! Deterministic seed derivation. Every stochastic component derives its own
//! stream from (base seed, purpose tags), so adding or reordering consumers
//! never shifts anyone else's randomness, and resuming a run needs no saved
//! generator state.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// Stable 64-bit seed from a base seed and a list of purpose tags.
pub fn derive_seed(base: u64, tags: &[&str]) -> u64 {
    let mut h = FNV_OFFSET;
    for byte in base.to_le_bytes() {
        h = (h ^ byte as u64).wrapping_mul(FNV_PRIME);
    }
    for tag in tags {
        for byte in tag.as_bytes() {
            h = (h ^ *byte as u64).wrapping_mul(FNV_PRIME);
        }
        h = (h ^ 0xff).wrapping_mul(FNV_PRIME);
    }
    splitmix64(h)
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Generator for one purpose stream.
pub fn rng_for(base: u64, tags: &[&str]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, tags))
}

/// One draw from N(mean, std^2) via Box-Muller.
pub fn normal(rng: &mut ChaCha8Rng, mean: f64, std: f64) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>(); // (0, 1], keeps the log finite
    let u2: f64 = rng.random::<f64>();
    let r = (-2.0 * u1.ln()).sqrt();
    mean + std * r * (2.0 * std::f64::consts::PI * u2).cos()
}
