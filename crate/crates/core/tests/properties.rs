use proptest::prelude::*;

use qexcl::certify::{fidelity_condition, optimality_certificate, perm_lower_bound, BoundDetails, PermMode};
use qexcl::ensembles::{discrimination_error, exclusion_error, lexicographic_subsets, Ensemble};
use qexcl::linalg::{
    abs_hermitian, eig_hermitian, fidelity, min_op, polar_unitary, psd_margin, trace_norm, HermitianMatrix,
};
use qexcl::models::{ExclusionModel, Variant};
use qexcl::random::{
    random_complex, random_density, random_ensemble, random_hermitian, random_measurement, rng_from_seed,
};
use qexcl::solver::{solve, SolveOptions, SolveReport, SolveStatus};

fn solved(variant: Variant, ops: Vec<HermitianMatrix>) -> (ExclusionModel, SolveReport) {
    let model = ExclusionModel::build(variant, ops).unwrap();
    let r = solve(&model, &SolveOptions::default()).unwrap();
    assert_eq!(r.status, SolveStatus::Optimal);
    (model, r)
}

fn ensemble(seed: u64, k: usize, d: usize) -> Ensemble {
    random_ensemble(&mut rng_from_seed(seed), k, d, 0.5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eigendecomposition_reconstructs(seed in any::<u64>(), d in 1usize..=16) {
        let h = random_hermitian(&mut rng_from_seed(seed), d);
        let rec = eig_hermitian(&h).reconstruct();
        let scale = h.as_matrix().frobenius_norm().max(1.0);
        prop_assert!(rec.max_abs_diff(&h) <= 1e-9 * scale);
    }

    #[test]
    fn fidelity_is_symmetric_and_bounded(seed in any::<u64>(), d in 1usize..=5) {
        let mut rng = rng_from_seed(seed);
        let rho = random_density(&mut rng, d).scale(0.7);
        let sigma = random_density(&mut rng, d);
        let f = fidelity(&rho, &sigma).unwrap();
        prop_assert!((f - fidelity(&sigma, &rho).unwrap()).abs() <= 1e-8);
        prop_assert!(f >= -1e-12);
        prop_assert!(f <= (rho.trace_re() * sigma.trace_re()).sqrt() + 1e-8);
    }

    #[test]
    fn min_op_lies_below_both(seed in any::<u64>(), d in 1usize..=5) {
        let mut rng = rng_from_seed(seed);
        let a = random_density(&mut rng, d);
        let b = random_density(&mut rng, d).scale(0.5);
        let m = min_op(&a, &b).unwrap();
        prop_assert!(psd_margin(&a.minus(&m)) >= -1e-9);
        prop_assert!(psd_margin(&b.minus(&m)) >= -1e-9);
    }

    #[test]
    fn trace_norm_via_polar_unitary(seed in any::<u64>(), d in 1usize..=6) {
        let m = random_complex(&mut rng_from_seed(seed), d, d);
        let u = polar_unitary(&m).unwrap();
        let via = (&m * &u).trace().re;
        prop_assert!((trace_norm(&m).unwrap() - via).abs() <= 1e-8);
    }

    #[test]
    fn abs_hermitian_has_absolute_spectrum(seed in any::<u64>(), d in 1usize..=6) {
        let h = random_hermitian(&mut rng_from_seed(seed), d);
        let a = abs_hermitian(&h);
        // |H| commutes with H and squares to H²
        let ha = h.as_matrix() * a.as_matrix();
        let ah = a.as_matrix() * h.as_matrix();
        prop_assert!(ha.max_abs_diff(&ah) <= 1e-9);
        let a2 = a.as_matrix() * a.as_matrix();
        let h2 = h.as_matrix() * h.as_matrix();
        prop_assert!(a2.max_abs_diff(&h2) <= 1e-9);
        prop_assert!(psd_margin(&a) >= -1e-9);
    }

    #[test]
    fn exclusion_discrimination_identity(seed in any::<u64>(), k in 2usize..=5, d in 1usize..=4) {
        let mut rng = rng_from_seed(seed);
        let ops = random_ensemble(&mut rng, k, d, 0.5).weighted();
        let m = random_measurement(&mut rng, k, d);
        let p_exc = exclusion_error(&ops, &m).unwrap();
        let p_dis = discrimination_error(&ops.to_discrimination().unwrap(), &m).unwrap();
        let kf = k as f64;
        let residual = p_dis - (kf - 2.0) / (kf - 1.0) - p_exc / (kf - 1.0);
        prop_assert!(residual.abs() <= 1e-10);
    }

    #[test]
    fn subset_reduction_counts(seed in any::<u64>(), k in 1usize..=6, m_frac in 0.0f64..1.0) {
        let ops = ensemble(seed, k, 2).weighted();
        let m = 1 + ((k - 1) as f64 * m_frac) as usize;
        let reduced = ops.m_state_reduction(m).unwrap();
        prop_assert_eq!(reduced.len(), lexicographic_subsets(k, m).len());
        let binom = (1..m).fold(1.0, |acc, i| acc * (k - i) as f64 / i as f64);
        prop_assert!((reduced.total_trace() - binom).abs() <= 1e-10);
        let same = ops.m_state_reduction(1).unwrap();
        for (a, b) in same.operators().iter().zip(ops.operators()) {
            prop_assert!(a.max_abs_diff(b) == 0.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn weak_duality_and_sandwich(seed in any::<u64>(), k in 2usize..=4, d in 2usize..=3) {
        let mut rng = rng_from_seed(seed);
        let ops = random_ensemble(&mut rng, k, d, 0.5).weighted();
        for variant in [Variant::MinError, Variant::WorstCase, Variant::Unambiguous] {
            let (model, r) = solved(variant, ops.operators().to_vec());
            prop_assert!(model.dual_bound(&r.dual).unwrap() - 1e-9 <= r.alpha);
            if variant == Variant::MinError {
                let m = random_measurement(&mut rng, k, d);
                prop_assert!(r.alpha <= exclusion_error(&ops, &m).unwrap() + 1e-8);
            }
        }
    }

    #[test]
    fn relabeling_leaves_optimum_unchanged(seed in any::<u64>(), k in 2usize..=4, d in 2usize..=3) {
        let e = ensemble(seed, k, d);
        let perm: Vec<usize> = (0..k).rev().collect();
        let (_, a) = solved(Variant::MinError, e.weighted().into_operators());
        let (_, b) = solved(Variant::MinError, e.permuted(&perm).unwrap().weighted().into_operators());
        prop_assert!((a.alpha - b.alpha).abs() <= 1e-7);
    }

    #[test]
    fn adding_a_state_rescales_the_error_bound(seed in any::<u64>(), k in 2usize..=3, d in 2usize..=3) {
        let e = ensemble(seed, k + 1, d);
        let fewer = Ensemble::uniform(e.states()[..k].to_vec(), None).unwrap();
        let more = Ensemble::uniform(e.states().to_vec(), None).unwrap();
        let (_, a) = solved(Variant::MinError, fewer.weighted().into_operators());
        let (_, b) = solved(Variant::MinError, more.weighted().into_operators());
        // never excluding the new state keeps the old error at weight k/(k+1)
        prop_assert!(b.alpha <= a.alpha * k as f64 / (k + 1) as f64 + 1e-7);
        // duplicating every state halves each prior and so halves the optimum
        let doubled: Vec<HermitianMatrix> = fewer.states().iter().chain(fewer.states()).cloned().collect();
        let (_, c) = solved(Variant::MinError, Ensemble::uniform(doubled, None).unwrap().weighted().into_operators());
        prop_assert!((c.alpha - a.alpha / 2.0).abs() <= 1e-7);
    }

    #[test]
    fn certified_measurements_are_optimal(seed in any::<u64>(), k in 2usize..=4, d in 2usize..=3) {
        let ops = ensemble(seed, k, d).weighted();
        let (model, r) = solved(Variant::MinError, ops.operators().to_vec());
        let m = qexcl::Measurement::new(r.primal.elements.clone(), false).unwrap();
        let cert = optimality_certificate(&ops, &m, 1e-6).unwrap();
        if cert.is_optimal {
            prop_assert!((cert.alpha - r.alpha).abs() <= 1e-7);
        }
        prop_assert!(model.primal_value(&r.primal).unwrap() >= cert.trace - 1e-6);
    }

    #[test]
    fn lower_bounds_never_exceed_optimum(seed in any::<u64>(), k in 2usize..=4, d in 2usize..=4) {
        let e = ensemble(seed, k, d);
        let (_, r) = solved(Variant::MinError, e.weighted().into_operators());
        let perm = perm_lower_bound(&e.weighted(), PermMode::default()).unwrap();
        prop_assert!(perm.value <= r.alpha + 1e-7);
        if let BoundDetails::Fidelity { exclusion_impossible: true, .. } = fidelity_condition(&e).unwrap().details {
            prop_assert!(r.alpha > 0.0);
        }
    }
}
