//! Translation between the exclusion models and the standard conic form.
//!
//! * Minimum error: blocks `M_1..M_k`, one equality per coordinate of
//!   `Σ M_i = I`; the multipliers are the coordinates of `N`.
//! * Worst case: blocks `λ, M_1..M_k, s_1..s_k` with
//!   `λ - tr[ρ̃_i M_i] - s_i = 0`; the first `k` multipliers are the `a_i`.
//! * Unambiguous: `tr[ρ̃_i M_i] = 0` with `M_i >= 0` confines `M_i` to the
//!   kernel of `ρ̃_i`, so `M_i = V_i Z_i V_i^dagger` with `V_i` an orthonormal
//!   kernel basis; the inconclusive element is an explicit block and the
//!   objective is `tr[S M_?]`.

use super::conic::{ConicProblem, Constraint, Entries, Iterate};
use crate::linalg::{eig_hermitian, hpd_inverse, ComplexMatrix, HermitianMatrix, C64};
use crate::models::{DualVars, ExclusionModel, PrimalVars, Split, Variant};

/// Shift applied to `N_c` on recovery; costs at most `d` times this in the bound.
const KERNEL_MARGIN: f64 = 1e-12;

/// Orthonormal basis of `d x d` Hermitian matrices under `Re tr[A B]`:
/// `E_pp`, `(E_pq + E_qp)/√2` and `i(E_pq - E_qp)/√2` for `p < q`.
pub(crate) fn hermitian_basis(d: usize) -> Vec<Entries> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(d * d);
    for p in 0..d {
        out.push(vec![(p, p, C64::new(1.0, 0.0))]);
    }
    for p in 0..d {
        for q in p + 1..d {
            out.push(vec![(p, q, C64::new(h, 0.0)), (q, p, C64::new(h, 0.0))]);
            out.push(vec![(p, q, C64::new(0.0, h)), (q, p, C64::new(0.0, -h))]);
        }
    }
    out
}

/// `Σ_b y_b E_b`.
pub(crate) fn from_coordinates(y: &[f64], d: usize) -> HermitianMatrix {
    let mut m = ComplexMatrix::zeros(d, d);
    for (entries, &yb) in hermitian_basis(d).iter().zip(y) {
        for &(r, c, v) in entries {
            m[(r, c)] += v * yb;
        }
    }
    m.hermitian_part()
}

/// Coordinates `Re tr[E_b H]`.
#[cfg(test)]
pub(crate) fn coordinates(h: &HermitianMatrix) -> Vec<f64> {
    hermitian_basis(h.dim())
        .iter()
        .map(|e| e.iter().map(|&(r, c, v)| (v * h[(c, r)]).re).sum())
        .collect()
}

fn dense_entries(m: &ComplexMatrix) -> Entries {
    let mut out = Vec::new();
    for r in 0..m.rows() {
        for c in 0..m.cols() {
            let v = m[(r, c)];
            if v != C64::new(0.0, 0.0) {
                out.push((r, c, v));
            }
        }
    }
    out
}

fn identity_rhs(d: usize) -> Vec<f64> {
    (0..d * d).map(|b| if b < d { 1.0 } else { 0.0 }).collect()
}

fn scalar(x: f64) -> HermitianMatrix {
    HermitianMatrix::from_real_diagonal(&[x])
}

pub(crate) struct Formulation<'m> {
    model: &'m ExclusionModel,
    pub problem: ConicProblem,
    /// Unambiguous only: per-state splits and the block index of each `Z_i`.
    splits: Vec<Split>,
    z_blocks: Vec<Option<usize>>,
}

impl<'m> Formulation<'m> {
    pub fn new(model: &'m ExclusionModel) -> Self {
        let (k, d) = (model.count(), model.dim());
        let rho = model.operators();
        let basis = hermitian_basis(d);
        let mut splits = Vec::new();
        let mut z_blocks = Vec::new();
        let problem = match model.variant() {
            Variant::MinError => ConicProblem {
                dims: vec![d; k],
                c: rho.to_vec(),
                constraints: basis
                    .iter()
                    .map(|e| Constraint {
                        terms: (0..k).map(|i| (i, e.clone())).collect(),
                    })
                    .collect(),
                b: identity_rhs(d),
            },
            Variant::WorstCase => {
                let mut dims = vec![1];
                dims.extend(std::iter::repeat_n(d, k));
                dims.extend(std::iter::repeat_n(1, k));
                let mut c = vec![scalar(1.0)];
                c.extend(std::iter::repeat_n(HermitianMatrix::zeros(d), k));
                c.extend(std::iter::repeat_n(scalar(0.0), k));
                let one = C64::new(1.0, 0.0);
                let mut constraints: Vec<Constraint> = rho
                    .iter()
                    .enumerate()
                    .map(|(i, r)| Constraint {
                        terms: vec![
                            (0, vec![(0, 0, one)]),
                            (1 + i, dense_entries(&r.scale(-1.0))),
                            (1 + k + i, vec![(0, 0, -one)]),
                        ],
                    })
                    .collect();
                constraints.extend(basis.iter().map(|e| Constraint {
                    terms: (0..k).map(|i| (1 + i, e.clone())).collect(),
                }));
                let mut b = vec![0.0; k];
                b.extend(identity_rhs(d));
                ConicProblem {
                    dims,
                    c,
                    constraints,
                    b,
                }
            }
            Variant::Unambiguous => {
                let mut dims = Vec::new();
                let mut c = Vec::new();
                for s in model.splits() {
                    let s = s.clone();
                    if s.kernel.cols() > 0 {
                        z_blocks.push(Some(dims.len()));
                        dims.push(s.kernel.cols());
                        c.push(HermitianMatrix::zeros(s.kernel.cols()));
                    } else {
                        z_blocks.push(None);
                    }
                    splits.push(s);
                }
                let m_block = dims.len();
                dims.push(d);
                c.push(model.total().clone());
                let constraints = basis
                    .iter()
                    .map(|e| {
                        let mut em = ComplexMatrix::zeros(d, d);
                        for &(r, col, v) in e {
                            em[(r, col)] += v;
                        }
                        let mut terms = Vec::new();
                        for (s, blk) in splits.iter().zip(&z_blocks) {
                            if let Some(blk) = blk {
                                terms.push((*blk, dense_entries(&s.kernel.adjoint_mul(&(&em * &s.kernel)))));
                            }
                        }
                        terms.push((m_block, e.clone()));
                        Constraint { terms }
                    })
                    .collect();
                ConicProblem {
                    dims,
                    c,
                    constraints,
                    b: identity_rhs(d),
                }
            }
        };
        Self {
            model,
            problem,
            splits,
            z_blocks,
        }
    }

    /// Strictly feasible primal and dual points.
    pub fn start(&self) -> Iterate {
        let (k, d) = (self.model.count(), self.model.dim());
        let kf = k as f64;
        let rho = self.model.operators();
        let p = &self.problem;
        match self.model.variant() {
            Variant::MinError => {
                let x = vec![HermitianMatrix::identity(d).scale(1.0 / kf); k];
                let mut y = vec![0.0; d * d];
                y[..d].fill(-1.0);
                let s = p.c.iter().zip(&p.adjoint(&y)).map(|(c, a)| c.minus(a)).collect();
                Iterate { x, y, s }
            }
            Variant::WorstCase => {
                let max_trace = rho.iter().map(HermitianMatrix::trace_re).fold(0.0, f64::max);
                let lambda = 1.0_f64.max(2.0 * max_trace / kf);
                let mut x = vec![scalar(lambda)];
                x.extend(std::iter::repeat_n(HermitianMatrix::identity(d).scale(1.0 / kf), k));
                x.extend(rho.iter().map(|r| scalar(lambda - r.trace_re() / kf)));
                let mut y = vec![1.0 / (2.0 * kf); k];
                let mut n = vec![0.0; d * d];
                n[..d].fill(-1.0);
                y.extend(n);
                let s = p.c.iter().zip(&p.adjoint(&y)).map(|(c, a)| c.minus(a)).collect();
                Iterate { x, y, s }
            }
            Variant::Unambiguous => {
                let mut x: Vec<HermitianMatrix> = p.dims[..p.dims.len() - 1]
                    .iter()
                    .map(|&r| HermitianMatrix::identity(r).scale(1.0 / (kf + 1.0)))
                    .collect();
                let used = self.measurement_from(&x);
                let sum = HermitianMatrix::sum(&used).expect("k >= 1");
                x.push(HermitianMatrix::identity(d).minus(&sum));
                let mut y = vec![0.0; d * d];
                y[..d].fill(-1.0);
                let s = p.c.iter().zip(&p.adjoint(&y)).map(|(c, a)| c.minus(a)).collect();
                Iterate { x, y, s }
            }
        }
    }

    fn measurement_from(&self, x: &[HermitianMatrix]) -> Vec<HermitianMatrix> {
        let d = self.model.dim();
        self.splits
            .iter()
            .zip(&self.z_blocks)
            .map(|(s, blk)| match blk {
                Some(b) => x[*b].congruence(&s.kernel.adjoint()),
                None => HermitianMatrix::zeros(d),
            })
            .collect()
    }

    pub fn primal(&self, it: &Iterate) -> PrimalVars {
        let k = self.model.count();
        match self.model.variant() {
            Variant::MinError => PrimalVars::new(it.x.clone()),
            Variant::WorstCase => PrimalVars {
                elements: it.x[1..=k].to_vec(),
                lambda: Some(it.x[0].trace_re()),
            },
            Variant::Unambiguous => PrimalVars::new(self.measurement_from(&it.x)),
        }
    }

    pub fn dual(&self, it: &Iterate) -> DualVars {
        let (k, d) = (self.model.count(), self.model.dim());
        match self.model.variant() {
            Variant::MinError => DualVars {
                n: from_coordinates(&it.y, d),
                a: vec![],
            },
            Variant::WorstCase => DualVars {
                n: from_coordinates(&it.y[k..], d),
                a: it.y[..k].to_vec(),
            },
            Variant::Unambiguous => {
                let mut nc = from_coordinates(&it.y, d);
                // Keep every kernel block of `N_c` strictly negative so the
                // multipliers stay bounded.
                let kernel_excess = self
                    .splits
                    .iter()
                    .filter(|s| s.kernel.cols() > 0)
                    .map(|s| eig_hermitian(&nc.congruence(&s.kernel)).max())
                    .fold(0.0_f64, f64::max);
                nc = nc.minus(&HermitianMatrix::identity(d).scale(kernel_excess + KERNEL_MARGIN));
                let a = self.splits.iter().map(|s| multiplier(s, &nc)).collect();
                DualVars {
                    n: self.model.total().minus(&nc),
                    a,
                }
            }
        }
    }
}

/// Smallest `a >= 0` with `a ρ̃ - N_c >= 0`, by the Schur complement over the
/// range/kernel split of `ρ̃`.
fn multiplier(s: &Split, nc: &HermitianMatrix) -> f64 {
    let rank = s.range.cols();
    if rank == 0 {
        return 0.0;
    }
    let n_rr = nc.congruence(&s.range);
    let mut reduced = n_rr;
    if s.kernel.cols() > 0 {
        let n_rk = s.range.adjoint_mul(&(&**nc * &s.kernel));
        let w_kk = nc.congruence(&s.kernel).scale(-1.0);
        let floor = 1e-300_f64.max(1e-14 * w_kk.max_abs());
        let mut shift = 0.0;
        let inv = loop {
            let shifted = w_kk.plus(&HermitianMatrix::identity(w_kk.dim()).scale(shift));
            if let Some(inv) = hpd_inverse(&shifted) {
                break inv;
            }
            shift = if shift == 0.0 { floor } else { shift * 10.0 };
        };
        let coupling = (&(&n_rk * &*inv) * &n_rk.adjoint()).hermitian_part();
        reduced = reduced.plus(&coupling);
    }
    let scale: Vec<f64> = s.range_values.iter().map(|l| 1.0 / l.sqrt()).collect();
    let d = HermitianMatrix::from_real_diagonal(&scale);
    eig_hermitian(&reduced.congruence(&d)).max().max(0.0)
}
