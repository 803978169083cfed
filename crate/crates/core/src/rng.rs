//! Deterministic random streams.
//!
//! Tree generation and random placement draw from SplitMix64 seeded directly
//! with the user seed. The simulators derive an independent key for every
//! draw coordinate (packet, link, attempt, ...) so results never depend on
//! the order in which work is scheduled.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::{SplitMix64, Xoshiro256PlusPlus};

pub fn splitmix(seed: u64) -> SplitMix64 {
    SplitMix64::seed_from_u64(seed)
}

/// Uniform real in `[0, 1)` built from the top 53 bits of one output.
pub fn unit_f64(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform index in `0..n` as `floor(unit_f64 * n)`.
pub fn index(rng: &mut impl RngCore, n: usize) -> usize {
    debug_assert!(n > 0);
    ((unit_f64(rng) * n as f64) as usize).min(n - 1)
}

/// Folds `coords` into `seed`, one SplitMix64 output per coordinate.
pub fn derive_key(seed: u64, coords: &[u64]) -> u64 {
    coords.iter().fold(splitmix(seed).next_u64(), |h, &c| {
        splitmix(h ^ c).next_u64()
    })
}

/// Uniform real in `[0, 1)` addressed by `(seed, coords)`.
pub fn keyed_unit(seed: u64, coords: &[u64]) -> f64 {
    (derive_key(seed, coords) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// An independent stream for one unit of parallel work.
pub fn stream(seed: u64, coords: &[u64]) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(derive_key(seed, coords))
}
