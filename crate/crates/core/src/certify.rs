//! Optimality certificates and lower bounds for minimum-error exclusion.
//!
//! * [`optimality_certificate`] checks whether a measurement is optimal by
//!   building `N = Σ ρ̃_i M_i` and testing it for dual feasibility.
//! * [`fidelity_condition`] evaluates the pairwise-fidelity necessary
//!   condition for conclusive exclusion and [`witness_from_fidelity`] builds
//!   the explicit dual point behind it.
//! * [`perm_lower_bound`] nests operator minima over orderings of the states.

use rand::seq::SliceRandom;

use crate::ensembles::{Ensemble, Measurement, WeightedOperators};
use crate::error::{Error, Result};
use crate::linalg::{fidelity, min_op, polar_unitary, psd_margin, sqrt_psd, ComplexMatrix, HermitianMatrix};
use crate::random::rng_from_seed;

pub const DEFAULT_CERTIFICATE_TOL: f64 = 1e-8;
pub const DEFAULT_WITNESS_EPS: f64 = 1e-3;
/// `p` is this fraction of its largest admissible value.
pub const WITNESS_P_FRACTION: f64 = 1.0 - 1e-6;
/// Largest `k` for which every ordering is tried.
pub const EXHAUSTIVE_MAX_K: usize = 8;
/// Sampled orderings per `k²` above [`EXHAUSTIVE_MAX_K`].
pub const SAMPLES_PER_K2: usize = 10;

/// Dual point `N = Σ ρ̃_i M_i` built from a measurement, with the checks
/// that decide optimality.
#[derive(Clone, Debug)]
pub struct Certificate {
    /// Hermitian part of `Σ ρ̃_i M_i`.
    pub n: HermitianMatrix,
    /// `max |N - N^dagger|` before symmetrizing.
    pub hermiticity_residual: f64,
    /// Minimum eigenvalue of `ρ̃_i - N` for each `i`.
    pub margins: Vec<f64>,
    /// `|tr N - α(M)|`.
    pub objective_match: f64,
    /// Exclusion error `α(M)` of the measurement.
    pub alpha: f64,
    pub trace: f64,
    pub tol: f64,
    pub is_optimal: bool,
}

impl Certificate {
    pub fn min_margin(&self) -> f64 {
        self.margins.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Certifies `m` for minimum-error exclusion of `ops`. Optimal exactly when
/// `N` is Hermitian, `N <= ρ̃_i` for all `i` and `tr N = α(M)`, all within `tol`.
pub fn optimality_certificate(ops: &WeightedOperators, m: &Measurement, tol: f64) -> Result<Certificate> {
    let conclusive = m.conclusive();
    if conclusive.len() != ops.len() {
        return Err(Error::CountMismatch {
            expected: ops.len(),
            found: conclusive.len(),
        });
    }
    if m.dim() != ops.dim() {
        return Err(Error::DimensionMismatch {
            expected: ops.dim(),
            found: m.dim(),
        });
    }
    let d = ops.dim();
    let mut raw = ComplexMatrix::zeros(d, d);
    for (r, e) in ops.operators().iter().zip(conclusive) {
        raw += &(r.as_matrix() * e.as_matrix());
    }
    let hermiticity_residual = raw.hermiticity_residual();
    let trace_full = raw.trace();
    let n = raw.hermitian_part();
    let margins: Vec<f64> = ops.operators().iter().map(|r| psd_margin(&r.minus(&n))).collect();
    let alpha: f64 = ops.operators().iter().zip(conclusive).map(|(r, e)| r.inner(e)).sum();
    let objective_match = (trace_full - alpha).norm();
    let is_optimal = hermiticity_residual <= tol && margins.iter().all(|&g| g >= -tol) && objective_match <= tol;
    Ok(Certificate {
        trace: n.trace_re(),
        n,
        hermiticity_residual,
        margins,
        objective_match,
        alpha,
        tol,
        is_optimal,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundKind {
    FidelityCondition,
    PermLowerBound,
    WitnessTrace,
}

impl BoundKind {
    pub fn name(self) -> &'static str {
        match self {
            BoundKind::FidelityCondition => "fidelity-condition",
            BoundKind::PermLowerBound => "perm-lower-bound",
            BoundKind::WitnessTrace => "witness-trace",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum BoundDetails {
    Fidelity {
        /// `k(k-2)`.
        threshold: f64,
        /// True when the sum exceeds the threshold, so conclusive exclusion is impossible.
        exclusion_impossible: bool,
    },
    Permutation {
        /// Best ordering, 0-based.
        permutation: Vec<usize>,
        /// Orderings evaluated.
        evaluated: usize,
        /// `Some(seed)` when orderings were sampled.
        seed: Option<u64>,
        /// Smallest eigenvalue of `ρ̃_i - N_ε` over `i` for the best ordering.
        min_margin: f64,
    },
    Witness {
        eps: f64,
        p: f64,
        /// Sum of fidelities over ordered pairs.
        fidelity_sum: f64,
        /// Smallest eigenvalue of `ρ_i - N` over `i`.
        min_margin: f64,
        /// `-kp + p(1-ε)/(k-2) Σ F`, the closed form of `tr N`.
        predicted_trace: f64,
        /// `tr N` scaled by the smallest prior: a lower bound on the
        /// exclusion error of the weighted ensemble.
        weighted_bound: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub value: f64,
    pub kind: BoundKind,
    pub details: BoundDetails,
}

/// Sum of `F(ρ_j, ρ_l)` over ordered pairs `j != l`. Conclusive exclusion
/// is impossible when it exceeds `k(k-2)`; priors play no role.
pub fn fidelity_condition(e: &Ensemble) -> Result<BoundReport> {
    let k = e.len();
    if k < 2 {
        return Err(Error::TooFewStates { k, required: 2 });
    }
    let value = 2.0 * pair_fidelities(e.states())?.iter().map(|&(_, _, f)| f).sum::<f64>();
    let threshold = (k * (k - 2)) as f64;
    Ok(BoundReport {
        value,
        kind: BoundKind::FidelityCondition,
        details: BoundDetails::Fidelity {
            threshold,
            exclusion_impossible: value > threshold,
        },
    })
}

fn pair_fidelities(states: &[HermitianMatrix]) -> Result<Vec<(usize, usize, f64)>> {
    let mut out = Vec::new();
    for j in 0..states.len() {
        for l in j + 1..states.len() {
            out.push((j, l, fidelity(&states[j], &states[l])?));
        }
    }
    Ok(out)
}

/// Largest `p` with `p <= ε / ((k-1)(1-ε)²/(k-2)² - ε)`; the bound is
/// infinite when the denominator is not positive, in which case `p` is
/// capped just below 1.
pub fn witness_p(k: usize, eps: f64) -> f64 {
    let km2 = (k - 2) as f64;
    let denom = (k - 1) as f64 * (1.0 - eps).powi(2) / (km2 * km2) - eps;
    let bound = if denom > 0.0 { eps / denom } else { f64::INFINITY };
    (bound * WITNESS_P_FRACTION).min(WITNESS_P_FRACTION)
}

/// Dual point for the unweighted states,
/// `N = -p Σ ρ_r + p(1-ε)/(k-2) Σ_{j<l} (√ρ_j U_jl √ρ_l + h.c.)` with `U_jl`
/// the polar unitary of `√ρ_l √ρ_j`. `N <= ρ_i` holds for every `i`, so a
/// positive trace rules out conclusive exclusion.
pub fn witness_from_fidelity(e: &Ensemble, eps: f64) -> Result<(HermitianMatrix, BoundReport)> {
    let k = e.len();
    if k < 3 {
        return Err(Error::DegenerateK { k });
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::BadEps { eps });
    }
    let p = witness_p(k, eps);
    let coupling = p * (1.0 - eps) / (k - 2) as f64;
    let roots: Vec<HermitianMatrix> = e.states().iter().map(sqrt_psd).collect::<Result<_>>()?;
    let d = e.dim();
    let mut n = ComplexMatrix::zeros(d, d);
    for r in e.states() {
        n -= &r.as_matrix().scale(p);
    }
    let mut fidelity_sum = 0.0;
    for j in 0..k {
        for l in j + 1..k {
            let (sj, sl) = (roots[j].as_matrix(), roots[l].as_matrix());
            let u = polar_unitary(&(sl * sj))?;
            let cross = &(sj * &u) * sl;
            fidelity_sum += 2.0 * cross.trace().re;
            n += &(&cross + &cross.adjoint()).scale(coupling);
        }
    }
    let n = n.hermitian_part();
    let min_margin = e
        .states()
        .iter()
        .map(|r| psd_margin(&r.minus(&n)))
        .fold(f64::INFINITY, f64::min);
    let value = n.trace_re();
    let predicted_trace = -(k as f64) * p + coupling * fidelity_sum;
    let p_min = e.probs().iter().copied().fold(f64::INFINITY, f64::min);
    let report = BoundReport {
        value,
        kind: BoundKind::WitnessTrace,
        details: BoundDetails::Witness {
            eps,
            p,
            fidelity_sum,
            min_margin,
            predicted_trace,
            weighted_bound: p_min * value,
        },
    };
    Ok((n, report))
}

/// How orderings are chosen by [`perm_lower_bound`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PermMode {
    /// Exhaustive for `k <= 8`, otherwise sampled with the given seed.
    Auto {
        seed: u64,
    },
    Exhaustive,
    Sampled {
        seed: u64,
    },
}

impl Default for PermMode {
    fn default() -> Self {
        PermMode::Auto { seed: 0 }
    }
}

/// `N_ε = min(ρ̃_ε(k), min(ρ̃_ε(k-1), ... min(ρ̃_ε(2), ρ̃_ε(1))))`.
pub fn nested_min(ops: &[HermitianMatrix], perm: &[usize]) -> Result<HermitianMatrix> {
    let mut acc = ops[perm[0]].clone();
    for &i in &perm[1..] {
        acc = min_op(&ops[i], &acc)?;
    }
    Ok(acc)
}

/// Lower bound `max_ε tr N_ε` on the minimum exclusion error. Ties between
/// orderings go to the lexicographically smallest.
pub fn perm_lower_bound(ops: &WeightedOperators, mode: PermMode) -> Result<BoundReport> {
    let k = ops.len();
    if k == 0 {
        return Err(Error::EmptyEnsemble);
    }
    let sampled_seed = match mode {
        PermMode::Exhaustive => None,
        PermMode::Sampled { seed } => Some(seed),
        PermMode::Auto { seed } => (k > EXHAUSTIVE_MAX_K).then_some(seed),
    };
    let operators = ops.operators();
    let mut best: Option<(f64, Vec<usize>, HermitianMatrix)> = None;
    let mut evaluated = 0;
    let mut consider = |value: f64, perm: &[usize], n: &HermitianMatrix| {
        evaluated += 1;
        let better = match &best {
            None => true,
            Some((v, p, _)) => value > *v || (value == *v && perm < p.as_slice()),
        };
        if better {
            best = Some((value, perm.to_vec(), n.clone()));
        }
    };
    match sampled_seed {
        None => {
            let mut prefix = Vec::with_capacity(k);
            let mut used = vec![false; k];
            let mut stack: Vec<HermitianMatrix> = Vec::with_capacity(k);
            search(operators, &mut prefix, &mut used, &mut stack, &mut consider)?;
        }
        Some(seed) => {
            let mut rng = rng_from_seed(seed);
            let mut perm: Vec<usize> = (0..k).collect();
            let n = nested_min(operators, &perm)?;
            consider(n.trace_re(), &perm, &n);
            for _ in 0..SAMPLES_PER_K2 * k * k {
                perm.shuffle(&mut rng);
                let n = nested_min(operators, &perm)?;
                consider(n.trace_re(), &perm, &n);
            }
        }
    }
    let (value, permutation, n) = best.expect("at least one ordering");
    let min_margin = operators
        .iter()
        .map(|r| psd_margin(&r.minus(&n)))
        .fold(f64::INFINITY, f64::min);
    Ok(BoundReport {
        value,
        kind: BoundKind::PermLowerBound,
        details: BoundDetails::Permutation {
            permutation,
            evaluated,
            seed: sampled_seed,
            min_margin,
        },
    })
}

/// Depth-first walk over orderings in lexicographic order, sharing the
/// nested minimum of common prefixes.
fn search(
    ops: &[HermitianMatrix],
    prefix: &mut Vec<usize>,
    used: &mut [bool],
    stack: &mut Vec<HermitianMatrix>,
    consider: &mut impl FnMut(f64, &[usize], &HermitianMatrix),
) -> Result<()> {
    if prefix.len() == ops.len() {
        let n = stack.last().expect("non-empty ordering");
        consider(n.trace_re(), prefix, n);
        return Ok(());
    }
    for i in 0..ops.len() {
        if used[i] {
            continue;
        }
        let next = match stack.last() {
            None => ops[i].clone(),
            Some(acc) => min_op(&ops[i], acc)?,
        };
        used[i] = true;
        prefix.push(i);
        stack.push(next);
        search(ops, prefix, used, stack, consider)?;
        stack.pop();
        prefix.pop();
        used[i] = false;
    }
    Ok(())
}

/// Whether every pair satisfies `tr[ρ_j ρ_l] <= tol`. Conclusive
/// discrimination, and so conclusive exclusion of all but one state,
/// requires this.
pub fn orthogonality_required(e: &Ensemble, tol: f64) -> bool {
    let s = e.states();
    (0..s.len()).all(|j| (j + 1..s.len()).all(|l| s[j].inner(&s[l]) <= tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::C64;
    use crate::random::{random_ensemble, rng_from_seed};

    fn ket(v: &[f64]) -> Vec<C64> {
        v.iter().map(|&x| C64::new(x, 0.0)).collect()
    }

    fn cusp(k: usize) -> Ensemble {
        let amp = 1.0 / ((k - 1) as f64).sqrt();
        let vecs: Vec<Vec<C64>> = (0..k)
            .map(|i| ket(&(0..k).map(|j| if i == j { 0.0 } else { amp }).collect::<Vec<_>>()))
            .collect();
        Ensemble::from_pure_states(&vecs, vec![1.0 / k as f64; k], None).unwrap()
    }

    fn pair(a: &[f64], b: &[f64]) -> Ensemble {
        Ensemble::from_pure_states(&[ket(a), ket(b)], vec![0.5, 0.5], None).unwrap()
    }

    #[test]
    fn cusp_basis_measurement_is_optimal() {
        let e = cusp(3);
        let c = optimality_certificate(&e.weighted(), &Measurement::computational_basis(3), 1e-8).unwrap();
        assert!(c.is_optimal);
        assert!(c.trace.abs() < 1e-12);
    }

    #[test]
    fn identical_pair_half_measurement() {
        let e = pair(&[1.0, 0.0], &[1.0, 0.0]);
        let half = HermitianMatrix::identity(2).scale(0.5);
        let m = Measurement::new(vec![half.clone(), half], false).unwrap();
        let c = optimality_certificate(&e.weighted(), &m, 1e-8).unwrap();
        assert!(c.is_optimal);
        assert!((c.trace - 0.5).abs() < 1e-12);
        assert!(c.n.max_abs_diff(&e.weighted().operators()[0]) < 1e-15);
        assert!(c.margins.iter().all(|g| g.abs() < 1e-12));
    }

    #[test]
    fn orthogonal_pair_wrong_assignment_fails() {
        let e = pair(&[1.0, 0.0], &[0.0, 1.0]);
        let c = optimality_certificate(&e.weighted(), &Measurement::computational_basis(2), 1e-8).unwrap();
        assert!(!c.is_optimal);
        assert!((c.alpha - 1.0).abs() < 1e-15);
        assert!(c.min_margin() < -0.1);
    }

    #[test]
    fn certificate_count_mismatch() {
        let e = cusp(3);
        let r = optimality_certificate(&e.weighted(), &Measurement::computational_basis(2), 1e-8);
        assert!(matches!(
            r,
            Err(Error::CountMismatch { .. }) | Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn fidelity_condition_examples() {
        let r = fidelity_condition(&cusp(3)).unwrap();
        assert!((r.value - 3.0).abs() < 1e-10);
        assert_eq!(
            r.details,
            BoundDetails::Fidelity {
                threshold: 3.0,
                exclusion_impossible: false
            }
        );
        let r = fidelity_condition(&pair(&[1.0, 0.0], &[1.0, 0.0])).unwrap();
        assert!((r.value - 2.0).abs() < 1e-10);
        assert!(matches!(
            r.details,
            BoundDetails::Fidelity {
                exclusion_impossible: true,
                ..
            }
        ));
        let r = fidelity_condition(&pair(&[1.0, 0.0], &[0.0, 1.0])).unwrap();
        assert!(r.value.abs() < 1e-10);
        let single = Ensemble::uniform(vec![HermitianMatrix::identity(2).scale(0.5)], None).unwrap();
        assert!(matches!(fidelity_condition(&single), Err(Error::TooFewStates { .. })));
    }

    #[test]
    fn witness_p_satisfies_condition() {
        for k in 3..8 {
            for eps in [1e-3, 0.1, 0.5] {
                let p = witness_p(k, eps);
                let km2 = (k - 2) as f64;
                let slack = (1.0 + p) / (k - 1) as f64 - ((1.0 - eps) * p / km2).powi(2) / (eps * p);
                assert!(slack >= 0.0 && p > 0.0 && p < 1.0, "k={k} eps={eps} p={p}");
            }
        }
    }

    #[test]
    fn witness_examples() {
        let same = Ensemble::from_pure_states(&vec![ket(&[1.0, 0.0]); 3], vec![1.0 / 3.0; 3], None).unwrap();
        let (_, r) = witness_from_fidelity(&same, 1e-3).unwrap();
        let BoundDetails::Witness {
            min_margin,
            predicted_trace,
            p,
            ..
        } = r.details
        else {
            panic!()
        };
        assert!(min_margin >= -1e-8);
        assert!(r.value > 0.0);
        assert!((r.value - predicted_trace).abs() < 1e-10);
        // Σ F = 6 for identical states.
        assert!((predicted_trace - (-3.0 * p + p * 0.999 * 6.0)).abs() < 1e-12);

        let basis = Ensemble::from_pure_states(
            &[ket(&[1.0, 0.0, 0.0]), ket(&[0.0, 1.0, 0.0]), ket(&[0.0, 0.0, 1.0])],
            vec![1.0 / 3.0; 3],
            None,
        )
        .unwrap();
        let (_, r) = witness_from_fidelity(&basis, 1e-3).unwrap();
        let BoundDetails::Witness { p, .. } = r.details else {
            panic!()
        };
        assert!((r.value + 3.0 * p).abs() < 1e-12);

        let (_, r) = witness_from_fidelity(&cusp(3), 1e-3).unwrap();
        assert!(r.value < 0.0);

        let two = pair(&[1.0, 0.0], &[1.0, 0.0]);
        assert!(matches!(
            witness_from_fidelity(&two, 1e-3),
            Err(Error::DegenerateK { k: 2 })
        ));
        assert!(matches!(
            witness_from_fidelity(&cusp(3), 1.0),
            Err(Error::BadEps { .. })
        ));
        assert!(matches!(
            witness_from_fidelity(&cusp(3), 0.0),
            Err(Error::BadEps { .. })
        ));
    }

    #[test]
    fn witness_margins_clean_on_random_mixed_states() {
        let mut rng = rng_from_seed(70);
        for _ in 0..20 {
            let e = random_ensemble(&mut rng, 4, 3, 0.3);
            let (_, r) = witness_from_fidelity(&e, 1e-3).unwrap();
            let BoundDetails::Witness {
                min_margin,
                predicted_trace,
                ..
            } = r.details
            else {
                panic!()
            };
            assert!(min_margin >= -1e-8);
            assert!((r.value - predicted_trace).abs() < 1e-9);
        }
    }

    #[test]
    fn perm_bound_examples() {
        let r = perm_lower_bound(&pair(&[1.0, 0.0], &[1.0, 0.0]).weighted(), PermMode::default()).unwrap();
        assert!((r.value - 0.5).abs() < 1e-12);
        let r = perm_lower_bound(&pair(&[1.0, 0.0], &[0.0, 1.0]).weighted(), PermMode::default()).unwrap();
        assert!(r.value.abs() < 1e-12);
        let BoundDetails::Permutation {
            permutation,
            evaluated,
            seed,
            min_margin,
        } = r.details
        else {
            panic!()
        };
        assert_eq!(permutation, vec![0, 1]);
        assert_eq!(evaluated, 2);
        assert_eq!(seed, None);
        assert!(min_margin >= -1e-12);
    }

    #[test]
    fn exhaustive_visits_all_orderings_in_order() {
        let mut rng = rng_from_seed(71);
        let w = random_ensemble(&mut rng, 4, 2, 0.5).weighted();
        let r = perm_lower_bound(&w, PermMode::Exhaustive).unwrap();
        let BoundDetails::Permutation {
            permutation, evaluated, ..
        } = &r.details
        else {
            panic!()
        };
        assert_eq!(*evaluated, 24);
        let direct = nested_min(w.operators(), permutation).unwrap().trace_re();
        assert!((direct - r.value).abs() < 1e-14);
    }

    #[test]
    fn sampled_mode_is_seeded() {
        let mut rng = rng_from_seed(72);
        let w = random_ensemble(&mut rng, 4, 2, 0.5).weighted();
        let a = perm_lower_bound(&w, PermMode::Sampled { seed: 5 }).unwrap();
        let b = perm_lower_bound(&w, PermMode::Sampled { seed: 5 }).unwrap();
        assert_eq!(a, b);
        let BoundDetails::Permutation { evaluated, seed, .. } = a.details else {
            panic!()
        };
        assert_eq!(evaluated, 1 + SAMPLES_PER_K2 * 16);
        assert_eq!(seed, Some(5));
        let exhaustive = perm_lower_bound(&w, PermMode::Exhaustive).unwrap();
        assert!(a.value <= exhaustive.value + 1e-15);
    }

    #[test]
    fn orthogonality_examples() {
        let basis = Ensemble::from_pure_states(
            &[ket(&[1.0, 0.0, 0.0]), ket(&[0.0, 1.0, 0.0]), ket(&[0.0, 0.0, 1.0])],
            vec![1.0 / 3.0; 3],
            None,
        )
        .unwrap();
        assert!(orthogonality_required(&basis, 1e-12));
        assert!(!orthogonality_required(&cusp(3), 1e-12));
        let s = 0.5_f64.sqrt();
        assert!(!orthogonality_required(&pair(&[1.0, 0.0], &[s, s]), 1e-12));
    }
}
