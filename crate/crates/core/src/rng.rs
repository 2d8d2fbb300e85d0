//! Seed derivation for independent random streams.
//!
//! Every stochastic routine draws from a stream keyed by `(seed, stream)`, so
//! results never depend on how work is scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SolverRng = ChaCha8Rng;

/// SplitMix64 finalizer applied to a combined seed/stream word.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed
        .wrapping_add(0x9e37_79b9_7f4a_7c15)
        .wrapping_add(stream.wrapping_mul(0xd1b5_4a32_d192_ed03));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn stream_rng(seed: u64, stream: u64) -> SolverRng {
    SolverRng::seed_from_u64(derive_seed(seed, stream))
}
