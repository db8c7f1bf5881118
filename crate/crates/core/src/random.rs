//! Seeded random instances: states, ensembles and measurements.
//!
//! All generators take an explicit RNG so that test suites and benchmarks
//! are reproducible from a single seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::ensembles::{Ensemble, Measurement};
use crate::linalg::{eig_hermitian, ComplexMatrix, HermitianMatrix, C64};

pub type SeededRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian(rng: &mut impl Rng) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Matrix with i.i.d. complex Gaussian entries.
pub fn random_complex(rng: &mut impl Rng, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

/// Hermitian matrix from the GUE-like ensemble `(G + G^dagger) / 2`.
pub fn random_hermitian(rng: &mut impl Rng, dim: usize) -> HermitianMatrix {
    random_complex(rng, dim, dim).hermitian_part()
}

/// Unit vector drawn uniformly from the complex sphere.
pub fn random_pure_state(rng: &mut impl Rng, dim: usize) -> Vec<C64> {
    let v: Vec<C64> = (0..dim).map(|_| gaussian(rng)).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

/// Density matrix `G G^dagger / tr` with `G` of the given rank.
pub fn random_density_of_rank(rng: &mut impl Rng, dim: usize, rank: usize) -> HermitianMatrix {
    let g = random_complex(rng, dim, rank.max(1));
    let p = (&g * &g.adjoint()).hermitian_part();
    let t = p.trace_re();
    p.scale(1.0 / t)
}

/// Full-rank density matrix (Ginibre ensemble).
pub fn random_density(rng: &mut impl Rng, dim: usize) -> HermitianMatrix {
    random_density_of_rank(rng, dim, dim)
}

/// Probability vector with entries bounded away from zero.
pub fn random_probabilities(rng: &mut impl Rng, k: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..k).map(|_| 0.2 + rng.random::<f64>()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

/// Ensemble of `k` states in dimension `dim`; each state is pure with
/// probability `pure_fraction`, otherwise of random rank.
pub fn random_ensemble(rng: &mut impl Rng, k: usize, dim: usize, pure_fraction: f64) -> Ensemble {
    let states = (0..k)
        .map(|_| {
            if rng.random::<f64>() < pure_fraction {
                HermitianMatrix::projector(&random_pure_state(rng, dim))
            } else {
                let rank = rng.random_range(1..=dim);
                random_density_of_rank(rng, dim, rank)
            }
        })
        .collect();
    let probs = random_probabilities(rng, k);
    Ensemble::new(states, probs, None).expect("generated ensemble is valid")
}

/// POVM with `k` full-rank elements: `M_i = S^{-1/2} G_i S^{-1/2}` with `S = Σ G_i`.
pub fn random_measurement(rng: &mut impl Rng, k: usize, dim: usize) -> Measurement {
    let raw: Vec<HermitianMatrix> = (0..k).map(|_| random_density(rng, dim)).collect();
    let total = HermitianMatrix::sum(&raw).expect("k >= 1");
    let inv_sqrt = eig_hermitian(&total).map(|l| 1.0 / l.sqrt());
    let elements = raw.iter().map(|g| g.congruence(&inv_sqrt)).collect();
    Measurement::new(elements, false).expect("generated measurement is valid")
}
