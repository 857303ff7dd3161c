//! Deterministic, splittable random streams.
//!
//! Everything stochastic in this crate draws from a ChaCha generator keyed
//! by a user-visible `u64` seed. Independent units of work (bootstrap
//! replicates, simulation replicates) each get their own stream derived
//! from (seed, index), so any replicate can be computed in isolation and
//! results are identical no matter how work is scheduled across threads.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Generator for stream `stream` of master seed `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derive a child seed for a nested layer of streams (e.g. the bootstrap
/// inside one simulation replicate). SplitMix64 finalizer; cheap and
/// well-dispersed, so unrelated (seed, tag) pairs do not collide in
/// practice.
pub fn child_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
