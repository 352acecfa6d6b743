//! Deterministic seed derivation.
//!
//! All randomness in the pipeline flows from a single master seed through
//! [`derive_seed`], so results are reproducible across platforms and worker
//! counts. The mixer is splitmix64, which is stable by construction (unlike
//! `DefaultHasher`, whose output may change between releases).

/// splitmix64 finalizer.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from a master seed and a stream index.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    splitmix64(master ^ splitmix64(stream))
}
