//! Deterministic stream seeding.
//!
//! Every random quantity in the library is drawn from a ChaCha8 stream keyed
//! by `(master_seed, stream_label, index)`. The derivation is documented here
//! so external tools can regenerate any individual sample:
//!
//! * `h0 = splitmix64(master_seed)`
//! * `h1 = splitmix64(h0 ^ fnv1a64(label))`
//! * `h2 = splitmix64(h1 ^ index)`
//! * seed bytes = little-endian `[h0, h1, h2, splitmix64(h2)]`

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

pub fn fnv1a64(s: &str) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for b in s.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// 64-bit sub-seed for `(master, label, index)`.
pub fn subseed(master: u64, label: &str, index: u64) -> u64 {
    let h0 = splitmix64(master);
    let h1 = splitmix64(h0 ^ fnv1a64(label));
    splitmix64(h1 ^ index)
}

/// Independent RNG stream for `(master, label, index)`.
pub fn stream_rng(master: u64, label: &str, index: u64) -> ChaCha8Rng {
    let h0 = splitmix64(master);
    let h1 = splitmix64(h0 ^ fnv1a64(label));
    let h2 = splitmix64(h1 ^ index);
    let h3 = splitmix64(h2);
    let mut seed = [0u8; 32];
    seed[0..8].copy_from_slice(&h0.to_le_bytes());
    seed[8..16].copy_from_slice(&h1.to_le_bytes());
    seed[16..24].copy_from_slice(&h2.to_le_bytes());
    seed[24..32].copy_from_slice(&h3.to_le_bytes());
    ChaCha8Rng::from_seed(seed)
}
