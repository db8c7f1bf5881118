use qexcl::certify::optimality_certificate;
use qexcl::pbr::{self, PbrGame};
use qexcl::solver::{SolveOptions, SolveStatus};

#[test]
fn zeta_is_certified_up_to_five_systems() {
    for n in 1..=5 {
        let zeta = pbr::zeta_measurement(n).unwrap();
        for j in [0, 3, 7, 9] {
            let g = PbrGame::new(n, pbr::threshold_theta(n) * j as f64 / 10.0).unwrap();
            let ops = pbr::build_pbr_ensemble(&g).unwrap().weighted();
            let cert = optimality_certificate(&ops, &zeta, 1e-8).unwrap();
            assert!(cert.is_optimal, "n={n} j={j}");
            let analytic = pbr::analytic_certificate(&g).unwrap();
            assert!(cert.n.max_abs_diff(&analytic) <= 1e-8, "n={n} j={j}");
        }
    }
}

#[test]
fn five_systems_solve_to_the_closed_form() {
    let g = PbrGame::new(5, 0.5 * pbr::threshold_theta(5)).unwrap();
    let r = pbr::solve_game(&g, &SolveOptions::default()).unwrap();
    assert_eq!(r.status, SolveStatus::Optimal);
    assert!((r.alpha - (1.0 - pbr::p_win_global(&g))).abs() <= 1e-6);
}

#[test]
fn six_systems_exceed_the_solver_cap() {
    let g = PbrGame::new(6, 0.1).unwrap();
    assert!(matches!(
        pbr::solve_game(&g, &SolveOptions::default()),
        Err(qexcl::Error::ScaleCap { .. })
    ));
    assert!(pbr::verify_certificate(&g).unwrap().min_margin >= -1e-8);
}
