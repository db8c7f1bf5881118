//! The PBR game: Alice prepares `n` qubits in `|ψ_{x_i}>`, Bob wins by
//! naming any string other than `x`. The global strategy is single-state
//! exclusion on the `2^n` product states.

use std::f64::consts::FRAC_PI_2;

use crate::ensembles::{Ensemble, Measurement};
use crate::error::{Error, Result};
use crate::linalg::{psd_margin, HermitianMatrix, C64};
use crate::models::{ExclusionModel, Variant};
use crate::solver::{solve, SolveOptions, SolveReport};

/// Largest `n` for which dense `2^n`-dimensional operators are built.
pub const MAX_N: usize = 10;
/// Largest `n` for which [`verify_certificate`] runs its eigenvalue checks.
pub const VERIFY_MAX_N: usize = 6;
/// Criterion values this close below the threshold count as met.
pub const CRITERION_TIE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PbrGame {
    n: usize,
    theta: f64,
}

impl PbrGame {
    /// `n >= 1` systems prepared with angle `theta` in `[0, π/2]` radians.
    /// Large `n` is accepted here; only the dense constructions are capped.
    pub fn new(n: usize, theta: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("n must be at least 1".into()));
        }
        if !(0.0..=FRAC_PI_2).contains(&theta) {
            return Err(Error::InvalidArgument(format!(
                "theta must lie in [0, pi/2], got {theta}"
            )));
        }
        Ok(Self { n, theta })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn tan_half(&self) -> f64 {
        (self.theta / 2.0).tan()
    }

    fn dim(&self) -> Result<usize> {
        dense_dim(self.n)
    }
}

fn dense_dim(n: usize) -> Result<usize> {
    if n > MAX_N {
        return Err(Error::ScaleCap {
            what: "n",
            value: n,
            cap: MAX_N,
        });
    }
    Ok(1 << n)
}

/// `2^{1/n} - 1`, the value `tan(θ/2)` must reach.
pub fn threshold_tan(n: usize) -> f64 {
    2f64.powf(1.0 / n as f64) - 1.0
}

/// Angle at which the criterion becomes an equality.
pub fn threshold_theta(n: usize) -> f64 {
    2.0 * threshold_tan(n).atan()
}

/// Bitstring label of index `x` with the first system as the most
/// significant bit.
pub fn bitstring(x: usize, n: usize) -> String {
    (0..n)
        .rev()
        .map(|b| if (x >> b) & 1 == 1 { '1' } else { '0' })
        .collect()
}

fn parity(v: usize) -> f64 {
    if v.count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `|ψ_0>` or `|ψ_1>` for a single system.
pub fn single_state(theta: f64, bit: u8) -> [C64; 2] {
    let (s, c) = (theta / 2.0).sin_cos();
    let sign = if bit == 0 { 1.0 } else { -1.0 };
    [C64::new(c, 0.0), C64::new(sign * s, 0.0)]
}

/// `|Ψ_x> = Σ_r (-1)^{x·r} cos^{n-|r|}(θ/2) sin^{|r|}(θ/2) |r>`.
pub fn global_state(game: &PbrGame, x: usize) -> Result<Vec<C64>> {
    let d = game.dim()?;
    let (s, c) = (game.theta / 2.0).sin_cos();
    let n = game.n as i32;
    Ok((0..d)
        .map(|r| {
            let w = r.count_ones() as i32;
            C64::new(parity(x & r) * c.powi(n - w) * s.powi(w), 0.0)
        })
        .collect())
}

/// `|Ψ_x>` assembled as the tensor product `⊗ |ψ_{x_i}>`.
pub fn global_state_tensor(game: &PbrGame, x: usize) -> Result<Vec<C64>> {
    game.dim()?;
    let mut v = vec![C64::new(1.0, 0.0)];
    for i in (0..game.n).rev() {
        let q = single_state(game.theta, ((x >> i) & 1) as u8);
        v = v.iter().flat_map(|a| q.iter().map(move |b| a * b)).collect();
    }
    Ok(v)
}

/// The `2^n` states `|Ψ_x>` with uniform priors, labelled by bitstring.
pub fn build_pbr_ensemble(game: &PbrGame) -> Result<Ensemble> {
    let d = game.dim()?;
    let vectors = (0..d).map(|x| global_state(game, x)).collect::<Result<Vec<_>>>()?;
    let labels = (0..d).map(|x| bitstring(x, game.n)).collect();
    Ensemble::from_pure_states(&vectors, vec![1.0 / d as f64; d], Some(labels))
}

/// `|ζ_x> = 2^{-n/2} (|0> - Σ_{r≠0} (-1)^{x·r} |r>)`.
pub fn zeta_vector(n: usize, x: usize) -> Result<Vec<C64>> {
    let d = dense_dim(n)?;
    let a = 1.0 / (d as f64).sqrt();
    Ok((0..d)
        .map(|r| {
            let v = if r == 0 { a } else { -parity(x & r) * a };
            C64::new(v, 0.0)
        })
        .collect())
}

/// Projective measurement `{|ζ_x><ζ_x|}`, independent of `θ`.
pub fn zeta_measurement(n: usize) -> Result<Measurement> {
    let d = dense_dim(n)?;
    let vectors = (0..d).map(|x| zeta_vector(n, x)).collect::<Result<Vec<_>>>()?;
    Measurement::projective(&vectors)
}

/// `tan(θ/2) - (2^{1/n} - 1)`; non-negative when exclusion is perfect.
pub fn criterion_slack(game: &PbrGame) -> f64 {
    game.tan_half() - threshold_tan(game.n)
}

/// Whether `2^{1/n} - 1 <= tan(θ/2)`, ties within [`CRITERION_TIE_TOL`] counting as met.
pub fn criterion(game: &PbrGame) -> bool {
    criterion_slack(game) >= -CRITERION_TIE_TOL
}

/// `C(θ) = 2^{-n} cos^{2n}(θ/2) (2 - (1 + tan(θ/2))^n)`, clamped to zero
/// once the criterion holds.
pub fn c_theta(game: &PbrGame) -> f64 {
    if criterion(game) {
        return 0.0;
    }
    let c = (game.theta / 2.0).cos();
    let n = game.n as i32;
    c.powi(2 * n) * (2.0 - (1.0 + game.tan_half()).powi(n)) / 2f64.powi(n)
}

/// `2^{-n} cos^{2n}(θ/2) (2 - (1 + tan(θ/2))^n)^2`, zero once the criterion holds.
pub fn analytic_trace(game: &PbrGame) -> f64 {
    if criterion(game) {
        return 0.0;
    }
    let c = (game.theta / 2.0).cos();
    let n = game.n as i32;
    let f = 2.0 - (1.0 + game.tan_half()).powi(n);
    c.powi(2 * n) * f * f / 2f64.powi(n)
}

/// Diagonal dual certificate `N = C(θ)(|0><0| - Σ_{r≠0} tan^{|r|}(θ/2) |r><r|)`.
pub fn analytic_certificate(game: &PbrGame) -> Result<HermitianMatrix> {
    let d = game.dim()?;
    let c = c_theta(game);
    let t = game.tan_half();
    let diag: Vec<f64> = (0..d)
        .map(|r| if r == 0 { c } else { -c * t.powi(r.count_ones() as i32) })
        .collect();
    Ok(HermitianMatrix::from_real_diagonal(&diag))
}

/// Direct numerical check of the analytic certificate.
#[derive(Clone, Debug, PartialEq)]
pub struct CertificateCheck {
    /// `min_x λ_min(ρ̃_x - N)`.
    pub min_margin: f64,
    /// `max_x |(ρ̃_x - N)|ζ_x>|`.
    pub null_residual: f64,
    /// `|tr N - analytic_trace|`.
    pub trace_residual: f64,
}

/// Checks `N <= ρ̃_x` and `(ρ̃_x - N)|ζ_x> = 0` for every `x`.
pub fn verify_certificate(game: &PbrGame) -> Result<CertificateCheck> {
    if game.n > VERIFY_MAX_N {
        return Err(Error::ScaleCap {
            what: "n",
            value: game.n,
            cap: VERIFY_MAX_N,
        });
    }
    let d = game.dim()?;
    let ensemble = build_pbr_ensemble(game)?;
    let n_op = analytic_certificate(game)?;
    let mut min_margin = f64::INFINITY;
    let mut null_residual: f64 = 0.0;
    for (x, rho) in ensemble.weighted().operators().iter().enumerate() {
        let a = rho.minus(&n_op);
        min_margin = min_margin.min(psd_margin(&a));
        let z = zeta_vector(game.n, x)?;
        let m = a.as_matrix();
        let norm = (0..d)
            .map(|i| m.row(i).iter().zip(&z).map(|(p, q)| p * q).sum::<C64>().norm_sqr())
            .sum::<f64>()
            .sqrt();
        null_residual = null_residual.max(norm);
    }
    let trace_residual = (n_op.trace_re() - analytic_trace(game)).abs();
    Ok(CertificateCheck {
        min_margin,
        null_residual,
        trace_residual,
    })
}

/// `P_win^G`: 1 when the criterion holds, otherwise `1 - tr N`.
pub fn p_win_global(game: &PbrGame) -> f64 {
    1.0 - analytic_trace(game)
}

/// Helstrom error for one pair, `q = (1 - sin θ)/2`.
pub fn helstrom_q(game: &PbrGame) -> f64 {
    0.5 * (1.0 - game.theta.sin())
}

/// `P_win^S = 1 - q^n`.
pub fn p_win_separable(game: &PbrGame) -> f64 {
    1.0 - helstrom_q(game).powi(game.n as i32)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PbrReport {
    pub criterion_met: bool,
    pub p_win_global: f64,
    pub p_win_separable: f64,
    pub alpha_analytic: f64,
    pub c_theta: f64,
    pub q: f64,
}

pub fn report(game: &PbrGame) -> PbrReport {
    PbrReport {
        criterion_met: criterion(game),
        p_win_global: p_win_global(game),
        p_win_separable: p_win_separable(game),
        alpha_analytic: analytic_trace(game),
        c_theta: c_theta(game),
        q: helstrom_q(game),
    }
}

/// Minimum-error exclusion SDP on the game's ensemble.
pub fn solve_game(game: &PbrGame, opts: &SolveOptions) -> Result<SolveReport> {
    let ensemble = build_pbr_ensemble(game)?;
    let model = ExclusionModel::build(Variant::MinError, ensemble.weighted().into_operators())?;
    solve(&model, opts)
}
