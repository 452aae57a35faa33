//! Seed derivation and counter-based uniform draws.
//!
//! Monte Carlo components must reproduce bit-for-bit regardless of iteration
//! order or thread count. Two primitives cover every use:
//!
//! * [`derive_seed`] — mixes a base seed with stream labels, so every trial,
//!   restart, or grid cell owns an independent ChaCha stream.
//! * [`unit_from_key`] — a stateless uniform in `[0, 1)` keyed by a seed and
//!   an index tuple; adjacency sampling draws one of these per unordered
//!   index multiset.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer; full-period mixing of a 64-bit state.
#[inline]
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive an independent child seed from a base seed and stream labels.
pub fn derive_seed(base: u64, labels: &[u64]) -> u64 {
    let mut h = splitmix64(base ^ 0xA076_1D64_78BD_642F);
    for &label in labels {
        h = splitmix64(h ^ label.wrapping_mul(0xE703_7ED1_A0B4_28DB));
    }
    h
}

/// Uniform draw in `[0, 1)` determined entirely by `(seed, key)`.
///
/// The key is hashed in order, so callers that need permutation invariance
/// (one coin per index multiset) pass the sorted tuple.
pub fn unit_from_key(seed: u64, key: &[usize]) -> f64 {
    let mut h = splitmix64(seed ^ 0x2545_F491_4F6C_DD1D);
    for &part in key {
        h = splitmix64(h ^ (part as u64).wrapping_add(1));
    }
    // top 53 bits -> [0, 1)
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Seeded ChaCha stream for shuffles and restart initializations.
pub fn chacha(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
