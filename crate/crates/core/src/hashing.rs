//! Deterministic hashing used for token ids and seed derivation.
//!
//! Both are part of the reproducibility contract: a run is replayable on any
//! machine, so nothing here may depend on `std`'s randomized hashers.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a over the bytes of `data`.
pub fn fnv1a64(data: &[u8]) -> u64 {
    let mut hash = FNV_OFFSET;
    for &b in data {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Derives the seed of a named component from the run seed.
///
/// `derive_seed(s, "forest")` is stable across releases and platforms.
pub fn derive_seed(seed: u64, component: &str) -> u64 {
    splitmix64(seed ^ fnv1a64(component.as_bytes()))
}

/// Derives a seed for the `index`-th member of a component (a tree, a step).
pub fn derive_indexed_seed(seed: u64, component: &str, index: u64) -> u64 {
    splitmix64(derive_seed(seed, component) ^ splitmix64(index))
}
