//! Seed derivation for independent random streams.
//!
//! Every stochastic step (bootstrap draw of tree `t`, shuffle of fold plan,
//! bootstrap round `b`) gets its own generator seeded from `(seed, stream)`,
//! so results do not depend on evaluation order or thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Seed used whenever the caller does not provide one.
pub const DEFAULT_SEED: u64 = 42;

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Combines a base seed with a stream index into a new 64-bit seed.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    mix(mix(seed.wrapping_add(0x9e37_79b9_7f4a_7c15)) ^ stream.wrapping_mul(0xd1b5_4a32_d192_ed03))
}

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    rng(derive_seed(seed, stream))
}
