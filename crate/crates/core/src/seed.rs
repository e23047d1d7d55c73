//! Stable seed derivation.
//!
//! Every random stream in a run is seeded from a 64-bit value derived from
//! the run seed by a fixed mixing function, so streams never depend on
//! scheduling or on the order in which runs are launched.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Order-sensitive hash of a sequence of integers.
pub fn derive_seed(parts: &[u64]) -> u64 {
    parts.iter().fold(0x005e_ed0f_5a4a_u64, |acc, &p| {
        splitmix64(acc ^ splitmix64(p))
    })
}

/// Stream used for world-level draws (task placement, ids, initial positions).
pub fn world_stream(run_seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(&[run_seed, 0]))
}

/// Private stream for agent `index`.
pub fn agent_stream(run_seed: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(&[run_seed, 1, index as u64]))
}
