//! Seed derivation. Every stochastic stage draws from a ChaCha stream whose
//! seed is a pure function of the root seed, a stage name and an index, so
//! results never depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StageRng = ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// `mix64(mix64(root ^ fnv1a(stage)) ^ index)`.
pub fn derive_seed(root: u64, stage: &str, index: u64) -> u64 {
    mix64(mix64(root ^ fnv1a(stage.as_bytes())) ^ index)
}

pub fn stage_rng(root: u64, stage: &str, index: u64) -> StageRng {
    StageRng::seed_from_u64(derive_seed(root, stage, index))
}

pub fn rng_from_seed(seed: u64) -> StageRng {
    StageRng::seed_from_u64(seed)
}
