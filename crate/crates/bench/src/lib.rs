//! Fixed inputs shared by the benchmarks.

use qexcl::random::{random_ensemble, rng_from_seed};
use qexcl::Ensemble;

/// Seeded random ensemble of `k` states in dimension `d`, half of them pure.
pub fn ensemble(k: usize, d: usize) -> Ensemble {
    random_ensemble(&mut rng_from_seed(((k as u64) << 32) | d as u64), k, d, 0.5)
}
