//! Seed derivation.
//!
//! Every random stream in a run is keyed by a path of integers hashed with
//! SplitMix64, so that the same (seed, round, client) triple always yields the
//! same generator no matter which worker thread consumes it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags used by the simulator.
pub(crate) const STREAM_INIT: u64 = 0x494e4954;
pub(crate) const STREAM_ROUND: u64 = 0x524f554e;
pub(crate) const STREAM_EPOCH: u64 = 0x45504f43;

/// One step of the SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds `path` into `base`: `h = splitmix64(h ^ splitmix64(p))` for each `p`.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(base), |h, &p| splitmix64(h ^ splitmix64(p)))
}

/// Seed for client `client_id` in communication round `round`.
pub fn round_seed(seed: u64, round: usize, client_id: usize) -> u64 {
    derive_seed(seed, &[STREAM_ROUND, round as u64, client_id as u64])
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
