//! Counter-based hashing and RNG stream derivation.
//!
//! Every stochastic unit of work (a sketch coordinate, a walk seed, a CSBM
//! replicate) derives its randomness from `(seed, unit key...)` alone, so
//! results do not depend on iteration order or thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hash an ordered key tuple into 64 bits.
#[inline]
pub fn mix(words: &[u64]) -> u64 {
    let mut h = 0x243F_6A88_85A3_08D3u64;
    for &w in words {
        h = splitmix64(h ^ splitmix64(w));
    }
    h
}

/// ±1 drawn from the lowest bit of a keyed hash.
#[inline]
pub fn sign(words: &[u64]) -> f64 {
    if mix(words) & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Uniform bucket in `[0, buckets)` from a keyed hash (multiply-shift on the
/// high bits, so the low sign bit stays independent).
#[inline]
pub fn bucket(words: &[u64], buckets: usize) -> usize {
    let h = mix(words) >> 1;
    ((h as u128 * buckets as u128) >> 63) as usize
}

/// Independent ChaCha stream for one unit of work.
pub fn derive_rng(seed: u64, key: &[u64]) -> ChaCha8Rng {
    let mut words = Vec::with_capacity(key.len() + 1);
    words.push(seed);
    words.extend_from_slice(key);
    ChaCha8Rng::seed_from_u64(mix(&words))
}

/// Stable FNV-1a over bytes (used for categorical feature hashing).
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}
