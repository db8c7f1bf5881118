//! The three exclusion SDPs in the block form `{A, B, Φ}`:
//! minimize `tr[A X]` subject to `Φ(X) = B`, `X >= 0`, with dual
//! maximize `tr[B Y]` subject to `Φ*(Y) <= A`.

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{eig_hermitian, hpd_inverse, psd_margin, ComplexMatrix, HermitianMatrix};

/// Eigenvalues of `ρ̃_i` at most this fraction of its largest eigenvalue are
/// treated as exact zeros by the unambiguous variant.
pub const KERNEL_TOL: f64 = 1e-10;

/// Eigenbasis of an operator split into range and numerical kernel.
#[derive(Clone, Debug)]
pub(crate) struct Split {
    pub range: ComplexMatrix,
    pub range_values: Vec<f64>,
    pub kernel: ComplexMatrix,
}

impl Split {
    pub(crate) fn new(op: &HermitianMatrix) -> Self {
        let spectrum = eig_hermitian(op);
        let d = op.dim();
        let cutoff = KERNEL_TOL * spectrum.max().max(0.0);
        let rank = spectrum.eigenvalues.iter().filter(|&&l| l > cutoff && l > 0.0).count();
        let v = &spectrum.eigenvectors;
        Split {
            range: ComplexMatrix::from_fn(d, rank, |r, c| v[(r, c)]),
            range_values: spectrum.eigenvalues[..rank].to_vec(),
            kernel: ComplexMatrix::from_fn(d, d - rank, |r, c| v[(r, rank + c)]),
        }
    }

    /// PSD margin of `a ρ + W` with `ρ` truncated to its range. With a
    /// kernel this is the smaller of the margins of the range block and of
    /// its Schur complement, which stays accurate when `a` is large.
    fn margin_with(&self, a: f64, w: &HermitianMatrix) -> f64 {
        let scaled: Vec<f64> = self.range_values.iter().map(|l| a * l).collect();
        let top = w
            .congruence(&self.range)
            .plus(&HermitianMatrix::from_real_diagonal(&scaled));
        if self.kernel.cols() == 0 {
            return psd_margin(&top);
        }
        let w_kk = w.congruence(&self.kernel);
        if self.range.cols() == 0 {
            return psd_margin(&w_kk);
        }
        let top_margin = psd_margin(&top);
        let Some(inv) = (top_margin > 0.0).then(|| hpd_inverse(&top)).flatten() else {
            return top_margin.min(0.0);
        };
        let w_rk = self.range.adjoint_mul(&(&**w * &self.kernel));
        let coupling = (&(&w_rk.adjoint() * &*inv) * &w_rk).hermitian_part();
        top_margin.min(psd_margin(&w_kk.minus(&coupling)))
    }
}

/// Which exclusion figure of merit is optimized.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Minimize the average error `Σ tr[ρ̃_i M_i]`.
    MinError,
    /// Never err; minimize the probability of the inconclusive outcome.
    Unambiguous,
    /// Minimize the largest per-state error `max_i tr[ρ̃_i M_i]`.
    WorstCase,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::MinError => "min-error",
            Variant::Unambiguous => "unambiguous",
            Variant::WorstCase => "worst-case",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Block-diagonal Hermitian matrix; scalar slots are `1x1` blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockDiagonal {
    pub blocks: Vec<HermitianMatrix>,
}

impl BlockDiagonal {
    pub fn new(blocks: Vec<HermitianMatrix>) -> Self {
        Self { blocks }
    }

    pub fn shape(&self) -> Vec<usize> {
        self.blocks.iter().map(HermitianMatrix::dim).collect()
    }

    /// Side length of the full matrix.
    pub fn total_dim(&self) -> usize {
        self.blocks.iter().map(HermitianMatrix::dim).sum()
    }

    /// `tr[self · other]`.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        check_shape(&other.shape(), &self.shape())?;
        Ok(self.blocks.iter().zip(&other.blocks).map(|(a, b)| a.inner(b)).sum())
    }

    pub fn trace(&self) -> f64 {
        self.blocks.iter().map(HermitianMatrix::trace_re).sum()
    }

    /// Smallest eigenvalue over all blocks.
    pub fn psd_margin(&self) -> f64 {
        self.blocks.iter().map(psd_margin).fold(f64::INFINITY, f64::min)
    }
}

fn scalar(x: f64) -> HermitianMatrix {
    HermitianMatrix::from_real_diagonal(&[x])
}

fn check_shape(found: &[usize], expected: &[usize]) -> Result<()> {
    if found.len() != expected.len() {
        return Err(Error::CountMismatch {
            expected: expected.len(),
            found: found.len(),
        });
    }
    for (&f, &e) in found.iter().zip(expected) {
        if f != e {
            return Err(Error::DimensionMismatch { expected: e, found: f });
        }
    }
    Ok(())
}

/// Primal variables: the measurement elements and, for worst-case
/// exclusion, the bound `λ`. The unambiguous inconclusive element
/// `M_? = I - Σ M_i` is implicit.
#[derive(Clone, Debug, PartialEq)]
pub struct PrimalVars {
    pub elements: Vec<HermitianMatrix>,
    pub lambda: Option<f64>,
}

impl PrimalVars {
    pub fn new(elements: Vec<HermitianMatrix>) -> Self {
        Self { elements, lambda: None }
    }
}

/// Dual variables: the operator `N` and the multipliers `a_i` (empty for
/// minimum-error exclusion).
#[derive(Clone, Debug, PartialEq)]
pub struct DualVars {
    pub n: HermitianMatrix,
    pub a: Vec<f64>,
}

/// Whether a residual must vanish or stay non-negative.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResidualKind {
    /// `|lhs - rhs|`; feasible when at most the tolerance.
    Equality,
    /// Smallest eigenvalue or scalar slack; feasible when at least `-tol`.
    Margin,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Residual {
    pub name: String,
    pub kind: ResidualKind,
    pub value: f64,
}

/// Named constraint residuals of a primal or dual point.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FeasibilityReport {
    pub residuals: Vec<Residual>,
}

impl FeasibilityReport {
    fn equality(&mut self, name: impl Into<String>, value: f64) {
        self.residuals.push(Residual {
            name: name.into(),
            kind: ResidualKind::Equality,
            value: value.abs(),
        });
    }

    fn margin(&mut self, name: impl Into<String>, value: f64) {
        self.residuals.push(Residual {
            name: name.into(),
            kind: ResidualKind::Margin,
            value,
        });
    }

    pub fn max_equality_residual(&self) -> f64 {
        self.residuals
            .iter()
            .filter(|r| r.kind == ResidualKind::Equality)
            .fold(0.0, |m, r| m.max(r.value))
    }

    /// Smallest margin, `+inf` when there are none.
    pub fn min_margin(&self) -> f64 {
        self.residuals
            .iter()
            .filter(|r| r.kind == ResidualKind::Margin)
            .fold(f64::INFINITY, |m, r| m.min(r.value))
    }

    pub fn is_feasible(&self, tol: f64) -> bool {
        self.max_equality_residual() <= tol && self.min_margin() >= -tol
    }

    /// Residuals that exceed `tol`.
    pub fn violations(&self, tol: f64) -> Vec<&Residual> {
        self.residuals
            .iter()
            .filter(|r| match r.kind {
                ResidualKind::Equality => r.value > tol,
                ResidualKind::Margin => r.value < -tol,
            })
            .collect()
    }

    pub fn get(&self, name: &str) -> Option<&Residual> {
        self.residuals.iter().find(|r| r.name == name)
    }
}

/// One exclusion SDP over the operators `ρ̃_1..ρ̃_k`.
#[derive(Clone, Debug)]
pub struct ExclusionModel {
    variant: Variant,
    operators: Vec<HermitianMatrix>,
    dim: usize,
    total: HermitianMatrix,
    /// Unambiguous only: range/kernel split of each operator.
    splits: Vec<Split>,
}

impl ExclusionModel {
    /// Accepts subnormalized operators; rejects empty lists, mixed dimensions
    /// and operators with eigenvalues below `-1e-8`.
    pub fn build(variant: Variant, operators: Vec<HermitianMatrix>) -> Result<Self> {
        let Some(first) = operators.first() else {
            return Err(Error::EmptyEnsemble);
        };
        let dim = first.dim();
        for op in &operators {
            if op.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: op.dim(),
                });
            }
            let margin = psd_margin(op);
            if margin < -crate::ensembles::PSD_TOL {
                return Err(Error::NotPsd { min_eigenvalue: margin });
            }
        }
        let total = HermitianMatrix::sum(&operators).expect("non-empty");
        let splits = match variant {
            Variant::Unambiguous => operators.iter().map(Split::new).collect(),
            _ => Vec::new(),
        };
        Ok(Self {
            variant,
            operators,
            dim,
            total,
            splits,
        })
    }

    pub(crate) fn splits(&self) -> &[Split] {
        &self.splits
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn operators(&self) -> &[HermitianMatrix] {
        &self.operators
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn count(&self) -> usize {
        self.operators.len()
    }

    /// `S = Σ_j ρ̃_j`.
    pub fn total(&self) -> &HermitianMatrix {
        &self.total
    }

    /// Block sizes of the primal variable `X`.
    pub fn primal_shape(&self) -> Vec<usize> {
        let (k, d) = (self.count(), self.dim);
        match self.variant {
            Variant::MinError | Variant::Unambiguous => vec![d; k],
            Variant::WorstCase => std::iter::once(1).chain(std::iter::repeat_n(d, k)).collect(),
        }
    }

    /// Block sizes of the dual variable `Y`.
    pub fn dual_shape(&self) -> Vec<usize> {
        let (k, d) = (self.count(), self.dim);
        match self.variant {
            Variant::MinError => vec![d],
            Variant::Unambiguous => std::iter::once(d).chain(std::iter::repeat_n(1, k)).collect(),
            Variant::WorstCase => std::iter::repeat_n(1, k).chain(std::iter::once(d)).collect(),
        }
    }

    /// The objective matrix `A`.
    pub fn objective_matrix(&self) -> BlockDiagonal {
        let k = self.count();
        match self.variant {
            Variant::MinError => BlockDiagonal::new(self.operators.clone()),
            Variant::Unambiguous => BlockDiagonal::new(vec![self.total.clone(); k]),
            Variant::WorstCase => {
                let mut blocks = vec![scalar(1.0)];
                blocks.extend(std::iter::repeat_n(HermitianMatrix::zeros(self.dim), k));
                BlockDiagonal::new(blocks)
            }
        }
    }

    /// The right-hand side `B`.
    pub fn constraint_matrix(&self) -> BlockDiagonal {
        let (k, d) = (self.count(), self.dim);
        match self.variant {
            Variant::MinError => BlockDiagonal::new(vec![HermitianMatrix::identity(d)]),
            Variant::Unambiguous => {
                let mut blocks = vec![HermitianMatrix::identity(d)];
                blocks.extend(std::iter::repeat_n(scalar(0.0), k));
                BlockDiagonal::new(blocks)
            }
            Variant::WorstCase => {
                let mut blocks = vec![scalar(0.0); k];
                blocks.push(HermitianMatrix::identity(d));
                BlockDiagonal::new(blocks)
            }
        }
    }

    /// The constraint map `Φ`.
    pub fn phi(&self, x: &BlockDiagonal) -> Result<BlockDiagonal> {
        check_shape(&x.shape(), &self.primal_shape())?;
        let rho = &self.operators;
        Ok(match self.variant {
            Variant::MinError => BlockDiagonal::new(vec![HermitianMatrix::sum(&x.blocks).expect("k >= 1")]),
            Variant::Unambiguous => {
                let mut blocks = vec![HermitianMatrix::sum(&x.blocks).expect("k >= 1")];
                blocks.extend(rho.iter().zip(&x.blocks).map(|(r, m)| scalar(r.inner(m))));
                BlockDiagonal::new(blocks)
            }
            Variant::WorstCase => {
                let lambda = x.blocks[0].trace_re();
                let ms = &x.blocks[1..];
                let mut blocks: Vec<HermitianMatrix> =
                    rho.iter().zip(ms).map(|(r, m)| scalar(lambda - r.inner(m))).collect();
                blocks.push(HermitianMatrix::sum(ms).expect("k >= 1"));
                BlockDiagonal::new(blocks)
            }
        })
    }

    /// The adjoint map `Φ*`, defined by `tr[Y Φ(X)] = tr[X Φ*(Y)]`.
    pub fn phi_adjoint(&self, y: &BlockDiagonal) -> Result<BlockDiagonal> {
        check_shape(&y.shape(), &self.dual_shape())?;
        let rho = &self.operators;
        let k = self.count();
        Ok(match self.variant {
            Variant::MinError => BlockDiagonal::new(vec![y.blocks[0].clone(); k]),
            Variant::Unambiguous => {
                let n = &y.blocks[0];
                BlockDiagonal::new(
                    rho.iter()
                        .zip(&y.blocks[1..])
                        .map(|(r, a)| n.plus(&r.scale(a.trace_re())))
                        .collect(),
                )
            }
            Variant::WorstCase => {
                let a: Vec<f64> = y.blocks[..k].iter().map(HermitianMatrix::trace_re).collect();
                let n = &y.blocks[k];
                let mut blocks = vec![scalar(a.iter().sum())];
                blocks.extend(rho.iter().zip(&a).map(|(r, &ai)| n.minus(&r.scale(ai))));
                BlockDiagonal::new(blocks)
            }
        })
    }

    fn check_primal(&self, p: &PrimalVars) -> Result<()> {
        if p.elements.len() != self.count() {
            return Err(Error::CountMismatch {
                expected: self.count(),
                found: p.elements.len(),
            });
        }
        for m in &p.elements {
            if m.dim() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    found: m.dim(),
                });
            }
        }
        Ok(())
    }

    fn check_dual(&self, d: &DualVars) -> Result<()> {
        if d.n.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: d.n.dim(),
            });
        }
        let expected = if self.variant == Variant::MinError {
            0
        } else {
            self.count()
        };
        if d.a.len() != expected {
            return Err(Error::CountMismatch {
                expected,
                found: d.a.len(),
            });
        }
        Ok(())
    }

    /// `X` assembled from primal variables in this variant's layout.
    pub fn primal_block(&self, p: &PrimalVars) -> Result<BlockDiagonal> {
        self.check_primal(p)?;
        Ok(match self.variant {
            Variant::WorstCase => {
                let mut blocks = vec![scalar(p.lambda.unwrap_or_else(|| self.max_error(p)))];
                blocks.extend(p.elements.iter().cloned());
                BlockDiagonal::new(blocks)
            }
            _ => BlockDiagonal::new(p.elements.clone()),
        })
    }

    /// `Y` assembled from dual variables in this variant's layout.
    pub fn dual_block(&self, d: &DualVars) -> Result<BlockDiagonal> {
        self.check_dual(d)?;
        Ok(match self.variant {
            Variant::MinError => BlockDiagonal::new(vec![d.n.clone()]),
            Variant::Unambiguous => {
                let mut blocks = vec![d.n.clone()];
                blocks.extend(d.a.iter().map(|&a| scalar(a)));
                BlockDiagonal::new(blocks)
            }
            Variant::WorstCase => {
                let mut blocks: Vec<HermitianMatrix> = d.a.iter().map(|&a| scalar(a)).collect();
                blocks.push(d.n.clone());
                BlockDiagonal::new(blocks)
            }
        })
    }

    /// Per-state errors `tr[ρ̃_i M_i]`.
    pub fn errors(&self, p: &PrimalVars) -> Vec<f64> {
        self.operators
            .iter()
            .zip(&p.elements)
            .map(|(r, m)| r.inner(m))
            .collect()
    }

    fn max_error(&self, p: &PrimalVars) -> f64 {
        self.errors(p).into_iter().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `I - Σ M_i`, the inconclusive element of an unambiguous measurement.
    pub fn inconclusive_element(&self, p: &PrimalVars) -> Result<HermitianMatrix> {
        self.check_primal(p)?;
        let sum = HermitianMatrix::sum(&p.elements).expect("k >= 1");
        Ok(HermitianMatrix::identity(self.dim).minus(&sum))
    }

    /// Conclusive probability `α̃ = tr[S Σ M_i]` of an unambiguous measurement.
    pub fn conclusive_probability(&self, p: &PrimalVars) -> Result<f64> {
        self.check_primal(p)?;
        Ok(self.total.inner(&HermitianMatrix::sum(&p.elements).expect("k >= 1")))
    }

    /// Objective in the minimization convention shared by all variants:
    /// average error, inconclusive probability `tr[S M_?]`, or `λ`.
    pub fn primal_value(&self, p: &PrimalVars) -> Result<f64> {
        self.check_primal(p)?;
        Ok(match self.variant {
            Variant::MinError => self.errors(p).iter().sum(),
            Variant::Unambiguous => self.total.trace_re() - self.conclusive_probability(p)?,
            Variant::WorstCase => p.lambda.unwrap_or_else(|| self.max_error(p)),
        })
    }

    /// The dual objective `β = tr N`.
    pub fn dual_value(&self, d: &DualVars) -> Result<f64> {
        self.check_dual(d)?;
        Ok(d.n.trace_re())
    }

    /// Bound on the optimal `primal_value` certified by a feasible dual point:
    /// a lower bound `tr N` for minimum-error and worst-case exclusion, and
    /// `tr S - tr N` for the unambiguous variant, whose dual bounds `α̃` from above.
    pub fn dual_bound(&self, d: &DualVars) -> Result<f64> {
        let beta = self.dual_value(d)?;
        Ok(match self.variant {
            Variant::Unambiguous => self.total.trace_re() - beta,
            _ => beta,
        })
    }

    pub fn primal_feasibility(&self, p: &PrimalVars) -> Result<FeasibilityReport> {
        self.check_primal(p)?;
        let mut report = FeasibilityReport::default();
        let sum = HermitianMatrix::sum(&p.elements).expect("k >= 1");
        let identity = HermitianMatrix::identity(self.dim);
        match self.variant {
            Variant::Unambiguous => report.margin("I - sum M_i >= 0", psd_margin(&identity.minus(&sum))),
            _ => report.equality("sum M_i = I", sum.max_abs_diff(&identity)),
        }
        for (i, m) in p.elements.iter().enumerate() {
            report.margin(format!("M_{} >= 0", i + 1), psd_margin(m));
        }
        let errors = self.errors(p);
        match self.variant {
            Variant::MinError => {}
            Variant::Unambiguous => {
                for (i, e) in errors.iter().enumerate() {
                    report.equality(format!("tr[rho_{0} M_{0}] = 0", i + 1), *e);
                }
            }
            Variant::WorstCase => {
                let lambda = p.lambda.unwrap_or_else(|| self.max_error(p));
                report.margin("lambda >= 0", lambda);
                for (i, e) in errors.iter().enumerate() {
                    report.margin(format!("lambda >= tr[rho_{0} M_{0}]", i + 1), lambda - e);
                }
            }
        }
        Ok(report)
    }

    pub fn dual_feasibility(&self, d: &DualVars) -> Result<FeasibilityReport> {
        self.check_dual(d)?;
        let mut report = FeasibilityReport::default();
        let n = &d.n;
        match self.variant {
            Variant::MinError => {
                for (i, r) in self.operators.iter().enumerate() {
                    report.margin(format!("rho_{} - N >= 0", i + 1), psd_margin(&r.minus(n)));
                }
            }
            Variant::Unambiguous => {
                report.margin("N >= 0", psd_margin(n));
                let w = n.minus(&self.total);
                for (i, (s, &a)) in self.splits.iter().zip(&d.a).enumerate() {
                    report.margin(format!("a_{0} rho_{0} + N - S >= 0", i + 1), s.margin_with(a, &w));
                }
            }
            Variant::WorstCase => {
                for (i, (r, &a)) in self.operators.iter().zip(&d.a).enumerate() {
                    report.margin(
                        format!("a_{0} rho_{0} - N >= 0", i + 1),
                        psd_margin(&r.scale(a).minus(n)),
                    );
                }
                report.margin("1 - sum a_i >= 0", 1.0 - d.a.iter().sum::<f64>());
                for (i, &a) in d.a.iter().enumerate() {
                    report.margin(format!("a_{} >= 0", i + 1), a);
                }
            }
        }
        Ok(report)
    }

    /// Removes small equality violations left by an iterative solver:
    /// the residual `I - Σ M_i` is spread evenly over the elements and `λ`
    /// is reset to the largest per-state error.
    pub fn repair_primal(&self, p: &PrimalVars) -> Result<PrimalVars> {
        self.check_primal(p)?;
        let mut out = p.clone();
        if self.variant != Variant::Unambiguous {
            let sum = HermitianMatrix::sum(&p.elements).expect("k >= 1");
            let share = HermitianMatrix::identity(self.dim)
                .minus(&sum)
                .scale(1.0 / self.count() as f64);
            for m in &mut out.elements {
                *m = m.plus(&share);
            }
        }
        if self.variant == Variant::WorstCase {
            out.lambda = Some(self.max_error(&out).max(0.0));
        }
        Ok(out)
    }

    /// Moves a nearly feasible dual point into the feasible set by shifting
    /// `N` along the identity (and clipping `a` for the worst-case variant);
    /// the resulting objective is a rigorous bound.
    pub fn repair_dual(&self, d: &DualVars) -> Result<DualVars> {
        self.check_dual(d)?;
        let mut out = d.clone();
        let identity = HermitianMatrix::identity(self.dim);
        match self.variant {
            Variant::MinError | Variant::WorstCase => {
                if self.variant == Variant::WorstCase {
                    for a in &mut out.a {
                        *a = a.max(0.0);
                    }
                    let sum: f64 = out.a.iter().sum();
                    if sum > 1.0 {
                        for a in &mut out.a {
                            *a /= sum;
                        }
                    }
                }
                let worst = self.dual_feasibility(&out)?.min_margin();
                if worst < 0.0 {
                    out.n = out.n.minus(&identity.scale(-worst));
                }
            }
            Variant::Unambiguous => {
                let worst = self.dual_feasibility(&out)?.min_margin();
                if worst < 0.0 {
                    out.n = out.n.plus(&identity.scale(-worst));
                }
            }
        }
        Ok(out)
    }
}
