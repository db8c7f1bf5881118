//! Primal-dual interior-point method for block-diagonal Hermitian SDPs in
//! standard form:
//!
//! ```text
//! minimize  Σ_b Re tr[C_b X_b]   s.t.  Σ_b Re tr[A_jb X_b] = b_j,  X >= 0
//! maximize  Σ_j b_j y_j          s.t.  S = C - Σ_j y_j A_j >= 0
//! ```
//!
//! Directions are HKM (`ΔX` from `X ΔS S^-1`, then symmetrized) with a
//! Mehrotra predictor-corrector step.

use crate::linalg::{
    cholesky, eig_hermitian, hpd_inverse, lower_inverse, ComplexMatrix, HermitianMatrix, RealCholesky, C64,
};

/// Sparse entries `(row, col, value)` of one block of a constraint matrix.
pub(crate) type Entries = Vec<(usize, usize, C64)>;

pub(crate) const FRACTION_TO_BOUNDARY: f64 = 0.98;
const REGULARIZATION: f64 = 1e-12;
const MAX_REGULARIZATION: f64 = 1e-6;
const REFINEMENT_STEPS: usize = 2;
const PRIMAL_RESIDUAL_FLOOR: f64 = 1e-15;

#[derive(Clone, Debug)]
pub(crate) struct Constraint {
    /// `(block, entries)` pairs; blocks not listed are zero.
    pub terms: Vec<(usize, Entries)>,
}

#[derive(Clone, Debug)]
pub(crate) struct ConicProblem {
    pub dims: Vec<usize>,
    pub c: Vec<HermitianMatrix>,
    pub constraints: Vec<Constraint>,
    pub b: Vec<f64>,
}

#[derive(Clone, Debug)]
pub(crate) struct Iterate {
    pub x: Vec<HermitianMatrix>,
    pub y: Vec<f64>,
    pub s: Vec<HermitianMatrix>,
}

#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct IterStats {
    pub iteration: usize,
    pub mu: f64,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub step_primal: f64,
    pub step_dual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum RunEnd {
    /// The observer asked to stop.
    Stopped,
    MaxIters,
    /// Newton system or cone factorization broke down.
    Failure,
}

fn re_trace_entries(entries: &Entries, z: &ComplexMatrix) -> f64 {
    entries.iter().map(|&(r, c, v)| (v * z[(c, r)]).re).sum()
}

fn add_entries(target: &mut ComplexMatrix, entries: &Entries, scale: f64) {
    for &(r, c, v) in entries {
        target[(r, c)] += v * scale;
    }
}

impl ConicProblem {
    pub fn order(&self) -> usize {
        self.dims.iter().sum()
    }

    /// `A(Z)_j = Σ_b Re tr[A_jb Z_b]`.
    pub fn apply(&self, z: &[ComplexMatrix]) -> Vec<f64> {
        self.constraints
            .iter()
            .map(|con| con.terms.iter().map(|(blk, e)| re_trace_entries(e, &z[*blk])).sum())
            .collect()
    }

    /// `A*(y) = Σ_j y_j A_j`, blockwise.
    pub fn adjoint(&self, y: &[f64]) -> Vec<HermitianMatrix> {
        let mut out: Vec<ComplexMatrix> = self.dims.iter().map(|&d| ComplexMatrix::zeros(d, d)).collect();
        for (con, &yj) in self.constraints.iter().zip(y) {
            if yj == 0.0 {
                continue;
            }
            for (blk, e) in &con.terms {
                add_entries(&mut out[*blk], e, yj);
            }
        }
        out.iter().map(ComplexMatrix::hermitian_part).collect()
    }

    pub fn primal_objective(&self, x: &[HermitianMatrix]) -> f64 {
        self.c.iter().zip(x).map(|(c, x)| c.inner(x)).sum()
    }

    pub fn dual_objective(&self, y: &[f64]) -> f64 {
        self.b.iter().zip(y).map(|(b, y)| b * y).sum()
    }

    /// Constraints touching each block, as `(constraint, term index)`.
    fn by_block(&self) -> Vec<Vec<(usize, usize)>> {
        let mut out = vec![Vec::new(); self.dims.len()];
        for (j, con) in self.constraints.iter().enumerate() {
            for (t, (blk, _)) in con.terms.iter().enumerate() {
                out[*blk].push((j, t));
            }
        }
        out
    }
}

fn inner(a: &[HermitianMatrix], b: &[HermitianMatrix]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.inner(y)).sum()
}

fn axpy(x: &[HermitianMatrix], alpha: f64, dx: &[HermitianMatrix]) -> Vec<HermitianMatrix> {
    x.iter().zip(dx).map(|(a, d)| a.plus(&d.scale(alpha))).collect()
}

/// Largest `t` with `X + t ΔX >= 0` (infinite when `ΔX >= 0`), or `None`
/// when `X` is not numerically positive definite.
fn max_step(x: &[HermitianMatrix], dx: &[HermitianMatrix]) -> Option<f64> {
    let mut step = f64::INFINITY;
    for (xb, db) in x.iter().zip(dx) {
        let lambda = if xb.dim() == 1 {
            let v = xb[(0, 0)].re;
            if !(v > 0.0) {
                return None;
            }
            db[(0, 0)].re / v
        } else {
            let l = cholesky(xb)?;
            let linv = lower_inverse(&l);
            eig_hermitian(&db.congruence(&linv.adjoint())).min()
        };
        if lambda < 0.0 {
            step = step.min(-1.0 / lambda);
        }
    }
    Some(step)
}

/// `G_jl = Re tr[A_j X A_l R]`, symmetrized.
fn operator_matrix(
    problem: &ConicProblem,
    by_block: &[Vec<(usize, usize)>],
    left: &[HermitianMatrix],
    right: &[HermitianMatrix],
) -> Vec<f64> {
    let m = problem.constraints.len();
    let mut out = vec![0.0; m * m];
    for (blk, touching) in by_block.iter().enumerate() {
        let x = left[blk].as_matrix();
        let si = right[blk].as_matrix();
        let d = x.rows();
        for &(l, tl) in touching {
            let entries = &problem.constraints[l].terms[tl].1;
            // G = X A_l R built from the non-zero rows of A_l R.
            let mut rows: Vec<usize> = entries.iter().map(|e| e.0).collect();
            rows.sort_unstable();
            rows.dedup();
            let mut asi = ComplexMatrix::zeros(rows.len(), d);
            for &(r, c, v) in entries {
                let slot = rows.binary_search(&r).expect("row present");
                for e in 0..d {
                    asi[(slot, e)] += v * si[(c, e)];
                }
            }
            let mut g = ComplexMatrix::zeros(d, d);
            for (slot, &r) in rows.iter().enumerate() {
                for a in 0..d {
                    let xa = x[(a, r)];
                    if xa == C64::new(0.0, 0.0) {
                        continue;
                    }
                    for e in 0..d {
                        g[(a, e)] += xa * asi[(slot, e)];
                    }
                }
            }
            for &(j, tj) in touching {
                let ej = &problem.constraints[j].terms[tj].1;
                out[j * m + l] += re_trace_entries(ej, &g);
            }
        }
    }
    for j in 0..m {
        for l in 0..j {
            let v = 0.5 * (out[j * m + l] + out[l * m + j]);
            out[j * m + l] = v;
            out[l * m + j] = v;
        }
    }
    out
}

/// Cholesky factor of a diagonally equilibrated positive semidefinite
/// matrix, with a diagonal shift that grows until the factorization succeeds.
struct ScaledFactor {
    scale: Vec<f64>,
    factor: RealCholesky,
}

impl ScaledFactor {
    fn new(a: &[f64], m: usize) -> Option<Self> {
        let scale: Vec<f64> = (0..m)
            .map(|j| {
                let d = a[j * m + j];
                if d > 0.0 && d.is_finite() {
                    1.0 / d.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        let scaled: Vec<f64> = (0..m * m).map(|p| a[p] * scale[p / m] * scale[p % m]).collect();
        let mut shift = REGULARIZATION;
        loop {
            if let Some(factor) = RealCholesky::factor(&scaled, m, shift) {
                return Some(Self { scale, factor });
            }
            shift *= 100.0;
            if shift > MAX_REGULARIZATION {
                return None;
            }
        }
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let scaled: Vec<f64> = b.iter().zip(&self.scale).map(|(b, s)| b * s).collect();
        self.factor
            .solve(&scaled)
            .iter()
            .zip(&self.scale)
            .map(|(x, s)| x * s)
            .collect()
    }
}

/// Adds `X A*(u) X` to `dx` so that `A(dx) = target`. The correction is
/// small in the norm induced by `X`, so it leaves the step length intact.
fn restore_primal_residual(
    problem: &ConicProblem,
    by_block: &[Vec<(usize, usize)>],
    x: &[HermitianMatrix],
    target: &[f64],
    dx: &mut [HermitianMatrix],
) {
    let mut factor = None;
    for _ in 0..=REFINEMENT_STEPS {
        let dense: Vec<ComplexMatrix> = dx.iter().map(|h| h.as_matrix().clone()).collect();
        let residual: Vec<f64> = target.iter().zip(problem.apply(&dense)).map(|(t, a)| t - a).collect();
        if residual.iter().all(|r| r.abs() <= PRIMAL_RESIDUAL_FLOOR) {
            return;
        }
        if factor.is_none() {
            factor = ScaledFactor::new(&operator_matrix(problem, by_block, x, x), residual.len());
        }
        let Some(f) = &factor else {
            return;
        };
        let u = problem.adjoint(&f.solve(&residual));
        for ((d, xb), ub) in dx.iter_mut().zip(x).zip(&u) {
            *d = d.plus(&ub.congruence(xb.as_matrix()));
        }
    }
}

struct Newton<'a> {
    problem: &'a ConicProblem,
    x: &'a [HermitianMatrix],
    sinv: Vec<HermitianMatrix>,
    schur: Vec<f64>,
    factor: ScaledFactor,
    rp: Vec<f64>,
    rd: Vec<HermitianMatrix>,
}

struct Direction {
    dx: Vec<HermitianMatrix>,
    dy: Vec<f64>,
    ds: Vec<HermitianMatrix>,
}

impl<'a> Newton<'a> {
    fn new(problem: &'a ConicProblem, it: &'a Iterate, by_block: &[Vec<(usize, usize)>]) -> Option<Self> {
        let sinv: Vec<HermitianMatrix> = it.s.iter().map(hpd_inverse).collect::<Option<_>>()?;
        let m = problem.constraints.len();
        let schur = operator_matrix(problem, by_block, &it.x, &sinv);
        let factor = ScaledFactor::new(&schur, m)?;
        let ax = problem.apply(&it.x.iter().map(|h| h.as_matrix().clone()).collect::<Vec<_>>());
        let rp = problem.b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let aty = problem.adjoint(&it.y);
        let rd = problem
            .c
            .iter()
            .zip(&aty)
            .zip(&it.s)
            .map(|((c, a), s)| c.minus(a).minus(s))
            .collect();
        Some(Self {
            problem,
            x: &it.x,
            sinv,
            schur,
            factor,
            rp,
            rd,
        })
    }

    /// Solves `M dy = rhs` with the regularized factor, refining against the
    /// unregularized `M`.
    fn solve_schur(&self, rhs: &[f64]) -> Vec<f64> {
        let m = rhs.len();
        let mut dy = self.factor.solve(rhs);
        for _ in 0..REFINEMENT_STEPS {
            let residual: Vec<f64> = (0..m)
                .map(|j| {
                    rhs[j]
                        - self.schur[j * m..(j + 1) * m]
                            .iter()
                            .zip(&dy)
                            .map(|(a, x)| a * x)
                            .sum::<f64>()
                })
                .collect();
            let correction = self.factor.solve(&residual);
            for (x, c) in dy.iter_mut().zip(&correction) {
                *x += c;
            }
        }
        dy
    }

    /// Solves the linearized system with complementarity right-hand side `rc`.
    fn direction(&self, rc: &[ComplexMatrix]) -> Direction {
        let t: Vec<ComplexMatrix> = rc
            .iter()
            .zip(self.x)
            .zip(&self.rd)
            .zip(&self.sinv)
            .map(|(((rc, x), rd), si)| &(rc - &(&**x * &**rd)) * &**si)
            .collect();
        let at = self.problem.apply(&t);
        let rhs: Vec<f64> = self.rp.iter().zip(&at).map(|(r, a)| r - a).collect();
        let dy = self.solve_schur(&rhs);
        let aty = self.problem.adjoint(&dy);
        let ds: Vec<HermitianMatrix> = self.rd.iter().zip(&aty).map(|(r, a)| r.minus(a)).collect();
        let dx = rc
            .iter()
            .zip(self.x)
            .zip(&ds)
            .zip(&self.sinv)
            .map(|(((rc, x), ds), si)| (&(rc - &(&**x * &**ds)) * &**si).hermitian_part())
            .collect();
        Direction { dx, dy, ds }
    }
}

/// Runs the interior-point iteration from `start`. `observe` sees every
/// iterate (including the start) and returns `true` to stop.
pub(crate) fn run(
    problem: &ConicProblem,
    start: Iterate,
    max_iters: usize,
    mut observe: impl FnMut(&Iterate, &IterStats) -> bool,
) -> RunEnd {
    let n = problem.order() as f64;
    let by_block = problem.by_block();
    let mut it = start;
    let mut stats = IterStats::default();
    for iteration in 0..=max_iters {
        stats.iteration = iteration;
        stats.mu = inner(&it.x, &it.s) / n;
        stats.primal_objective = problem.primal_objective(&it.x);
        stats.dual_objective = problem.dual_objective(&it.y);

        let Some(newton) = Newton::new(problem, &it, &by_block) else {
            return RunEnd::Failure;
        };
        stats.primal_infeasibility = newton.rp.iter().fold(0.0, |m, r| m.max(r.abs()));
        stats.dual_infeasibility = newton.rd.iter().fold(0.0, |m, r| m.max(r.max_abs()));
        if observe(&it, &stats) {
            return RunEnd::Stopped;
        }
        if iteration == max_iters {
            break;
        }

        let xs: Vec<ComplexMatrix> = it.x.iter().zip(&it.s).map(|(x, s)| &**x * &**s).collect();
        let predictor_rc: Vec<ComplexMatrix> = xs.iter().map(|p| -p).collect();
        let aff = newton.direction(&predictor_rc);
        let (Some(ap), Some(ad)) = (max_step(&it.x, &aff.dx), max_step(&it.s, &aff.ds)) else {
            return RunEnd::Failure;
        };
        let (ap, ad) = (ap.min(1.0), ad.min(1.0));
        let mu_aff = inner(&axpy(&it.x, ap, &aff.dx), &axpy(&it.s, ad, &aff.ds)) / n;
        let sigma = if stats.mu > 0.0 {
            (mu_aff / stats.mu).clamp(0.0, 1.0).powi(3)
        } else {
            0.0
        };

        let corrector_rc: Vec<ComplexMatrix> = xs
            .iter()
            .zip(aff.dx.iter().zip(&aff.ds))
            .map(|(p, (dx, ds))| {
                let mut rc = -p;
                rc -= &(&**dx * &**ds);
                for i in 0..rc.rows() {
                    rc[(i, i)] += C64::new(sigma * stats.mu, 0.0);
                }
                rc
            })
            .collect();
        let mut dir = newton.direction(&corrector_rc);
        restore_primal_residual(problem, &by_block, &it.x, &newton.rp, &mut dir.dx);
        let (Some(ap), Some(ad)) = (max_step(&it.x, &dir.dx), max_step(&it.s, &dir.ds)) else {
            return RunEnd::Failure;
        };
        let ap = (FRACTION_TO_BOUNDARY * ap).min(1.0);
        let ad = (FRACTION_TO_BOUNDARY * ad).min(1.0);
        if !(ap.is_finite() && ad.is_finite()) || (ap == 0.0 && ad == 0.0) {
            return RunEnd::Failure;
        }
        stats.step_primal = ap;
        stats.step_dual = ad;
        it = Iterate {
            x: axpy(&it.x, ap, &dir.dx),
            y: it.y.iter().zip(&dir.dy).map(|(y, d)| y + ad * d).collect(),
            s: axpy(&it.s, ad, &dir.ds),
        };
    }
    RunEnd::MaxIters
}
