//! Counter-based seed derivation.
//!
//! Every random stream in a run is derived from the run seed by hashing, never
//! by advancing a shared generator, so any offspring can be regenerated in
//! isolation from `(run_seed, generation, index)`:
//!
//! ```text
//! splitmix64(x) = let z = x + 0x9E3779B97F4A7C15        (wrapping)
//!                 z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//!                 z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//!                 z ^ (z >> 31)
//! mix(a, b)       = splitmix64(splitmix64(a) ^ b)
//! generation_seed = mix(run_seed, generation)
//! offspring_seed  = mix(generation_seed, index)
//! ```
//!
//! An offspring seed initializes a `ChaCha8Rng` (via `seed_from_u64`), from
//! which the mixture component (if any) and then the standard-normal noise are
//! drawn.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Salts keep streams used for different purposes apart.
pub(crate) const SALT_NORMALIZER: u64 = 0x6e6f_726d_616c_697a;
pub(crate) const SALT_SPLIT: u64 = 0x7370_6c69_745f_706f;
pub(crate) const SALT_INIT: u64 = 0x696e_6974_5f6d_6c70;
pub(crate) const SALT_ADAPT: u64 = 0x6164_6170_745f_6b6b;
pub(crate) const SALT_FLIP: u64 = 0x666c_6970_5f6e_6574;

#[inline]
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
pub fn mix(a: u64, b: u64) -> u64 {
    splitmix64(splitmix64(a) ^ b)
}

pub fn generation_seed(run_seed: u64, generation: u64) -> u64 {
    mix(run_seed, generation)
}

pub fn offspring_seed(generation_seed: u64, index: u64) -> u64 {
    mix(generation_seed, index)
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform draw in `[0, 1)` that is a pure function of `seed`.
pub fn unit_uniform(seed: u64) -> f64 {
    rng_from_seed(seed).random::<f64>()
}
