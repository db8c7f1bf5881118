//! Solves exclusion models to optimality with a certified duality gap.

mod conic;
mod formulation;

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::HermitianMatrix;
use crate::models::{DualVars, ExclusionModel, FeasibilityReport, PrimalVars};
use crate::random::{random_density, rng_from_seed};

use conic::{run, IterStats, Iterate, RunEnd};
use formulation::Formulation;

/// Largest accepted `k·d`, the side length of the primal block matrix.
pub const MAX_BLOCK_ORDER: usize = 1024;
/// Largest accepted dimension `d`; the Newton system has `d²` rows.
pub const MAX_DIM: usize = 64;
/// Restarts from perturbed starting points after a numerical failure.
const RESTARTS: usize = 2;

#[derive(Clone, Debug, PartialEq)]
pub struct SolveOptions {
    /// Absolute tolerance on `|alpha - beta|`.
    pub gap_tol: f64,
    pub max_iters: usize,
    /// Tolerance on equality residuals and negative PSD margins.
    pub feas_tol: f64,
    /// Seed for the perturbed restarts that follow a numerical failure.
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            gap_tol: 1e-9,
            max_iters: 200,
            feas_tol: 1e-9,
            seed: 0,
        }
    }
}

impl SolveOptions {
    fn validate(&self) -> Result<()> {
        for (name, v) in [("gap_tol", self.gap_tol), ("feas_tol", self.feas_tol)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    MaxIters,
    NumericalFailure,
}

impl SolveStatus {
    pub fn name(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::MaxIters => "max-iters",
            SolveStatus::NumericalFailure => "numerical-failure",
        }
    }
}

/// One interior-point iteration as seen by the caller.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    /// `alpha - beta` of the repaired iterate.
    pub gap: f64,
    pub mu: f64,
    pub step_primal: f64,
    pub step_dual: f64,
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub primal: PrimalVars,
    pub dual: DualVars,
    /// Primal objective in the minimization convention of [`ExclusionModel::primal_value`].
    pub alpha: f64,
    /// Matching dual bound, see [`ExclusionModel::dual_bound`].
    pub beta: f64,
    pub gap: f64,
    pub iterations: usize,
    pub status: SolveStatus,
    pub primal_feasibility: FeasibilityReport,
    pub dual_feasibility: FeasibilityReport,
    pub trace: Vec<IterationRecord>,
}

impl SolveReport {
    fn meets(&self, opts: &SolveOptions) -> bool {
        self.gap.abs() <= opts.gap_tol
            && self.primal_feasibility.is_feasible(opts.feas_tol)
            && self.dual_feasibility.is_feasible(opts.feas_tol)
    }

    /// Distance from the stopping criteria in units of the tolerances; at
    /// most 1 exactly when the criteria hold.
    fn merit(&self, opts: &SolveOptions) -> f64 {
        let p = &self.primal_feasibility;
        let d = &self.dual_feasibility;
        let infeasible = p
            .max_equality_residual()
            .max(d.max_equality_residual())
            .max(-p.min_margin())
            .max(-d.min_margin())
            .max(0.0);
        let merit = (self.gap.abs() / opts.gap_tol).max(infeasible / opts.feas_tol);
        if merit.is_nan() {
            f64::INFINITY
        } else {
            merit
        }
    }
}

/// Strictly feasible primal and dual points: `M_i = I/k` with `N = -I` for
/// minimum error; additionally `λ = 1` and `a_i = 1/(2k)` for the worst
/// case; kernel-supported `M_i` with `N = S + I`, `a_i = 0` for the
/// unambiguous variant.
pub fn strict_start(model: &ExclusionModel) -> (PrimalVars, DualVars) {
    let f = Formulation::new(model);
    let it = f.start();
    (f.primal(&it), f.dual(&it))
}

fn check_scale(model: &ExclusionModel) -> Result<()> {
    let order = model.count() * model.dim();
    if order > MAX_BLOCK_ORDER {
        return Err(Error::ScaleCap {
            what: "k*d",
            value: order,
            cap: MAX_BLOCK_ORDER,
        });
    }
    if model.dim() > MAX_DIM {
        return Err(Error::ScaleCap {
            what: "d",
            value: model.dim(),
            cap: MAX_DIM,
        });
    }
    Ok(())
}

fn evaluate(model: &ExclusionModel, f: &Formulation, it: &Iterate) -> Result<SolveReport> {
    let primal = model.repair_primal(&f.primal(it))?;
    let dual = model.repair_dual(&f.dual(it))?;
    let alpha = model.primal_value(&primal)?;
    let beta = model.dual_bound(&dual)?;
    Ok(SolveReport {
        primal_feasibility: model.primal_feasibility(&primal)?,
        dual_feasibility: model.dual_feasibility(&dual)?,
        primal,
        dual,
        alpha,
        beta,
        gap: alpha - beta,
        iterations: 0,
        status: SolveStatus::MaxIters,
        trace: Vec::new(),
    })
}

/// Perturbs the primal start by a random positive definite term and the
/// dual slack by a random shift of the multipliers' `N` part.
fn perturb(start: &Iterate, rng: &mut impl Rng) -> Iterate {
    let x = start
        .x
        .iter()
        .map(|b| {
            let noise = random_density(rng, b.dim()).scale(0.1 * rng.random::<f64>());
            b.plus(&noise)
        })
        .collect();
    Iterate {
        x,
        y: start.y.clone(),
        s: start.s.clone(),
    }
}

/// Solves `model`, returning the best iterate found together with its
/// repaired (exactly feasible where possible) primal and dual points.
pub fn solve(model: &ExclusionModel, opts: &SolveOptions) -> Result<SolveReport> {
    opts.validate()?;
    check_scale(model)?;
    let f = Formulation::new(model);
    let mut rng = rng_from_seed(opts.seed);
    let mut start = f.start();
    let mut best: Option<SolveReport> = None;
    let mut trace = Vec::new();
    let mut total_iters = 0;
    let mut failure = false;

    for attempt in 0..=RESTARTS {
        let mut error = None;
        let end = run(
            &f.problem,
            start.clone(),
            opts.max_iters.saturating_sub(total_iters),
            |it, stats: &IterStats| {
                let mut report = match evaluate(model, &f, it) {
                    Ok(r) => r,
                    Err(e) => {
                        error = Some(e);
                        return true;
                    }
                };
                let iteration = total_iters + stats.iteration;
                trace.push(IterationRecord {
                    iteration,
                    gap: report.gap,
                    mu: stats.mu,
                    step_primal: stats.step_primal,
                    step_dual: stats.step_dual,
                });
                report.iterations = iteration;
                let done = report.meets(opts);
                let better = best.as_ref().is_none_or(|b| report.merit(opts) <= b.merit(opts));
                if better {
                    best = Some(report);
                }
                done
            },
        );
        if let Some(e) = error {
            return Err(e);
        }
        total_iters = best.as_ref().map_or(total_iters, |b| b.iterations.max(total_iters));
        match end {
            RunEnd::Stopped | RunEnd::MaxIters => {
                failure = false;
                break;
            }
            RunEnd::Failure => {
                failure = true;
                if best.as_ref().is_some_and(|b| b.meets(opts)) || attempt == RESTARTS {
                    break;
                }
                start = perturb(&f.start(), &mut rng);
            }
        }
    }

    let mut report = best.expect("the observer sees at least the starting point");
    report.status = if report.meets(opts) {
        SolveStatus::Optimal
    } else if failure {
        SolveStatus::NumericalFailure
    } else {
        SolveStatus::MaxIters
    };
    report.trace = trace;
    Ok(report)
}

/// Convenience: optimal value of minimum-error exclusion for the operators.
pub fn min_error_value(operators: &[HermitianMatrix], opts: &SolveOptions) -> Result<f64> {
    let model = ExclusionModel::build(crate::models::Variant::MinError, operators.to_vec())?;
    Ok(solve(&model, opts)?.alpha)
}
