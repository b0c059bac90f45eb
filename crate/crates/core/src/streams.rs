//! Reproducible per-realization random streams.
//!
//! A stream is ChaCha8 keyed by `(seed, tag)` with the realization index as
//! the 64-bit stream id, so the draws of realization `k` never depend on how
//! many other realizations ran before it or on which thread.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// FNV-1a, fixed across platforms and compiler versions.
fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(*b)).wrapping_mul(0x0100_0000_01b3))
}

/// Independent stream for `(seed, realization_index, stream_tag)`.
pub fn realization_rng(seed: u64, realization_index: u64, stream_tag: &str) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&fnv1a(stream_tag.as_bytes()).to_le_bytes());
    key[16..24].copy_from_slice(&(stream_tag.len() as u64).to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(realization_index);
    rng
}
