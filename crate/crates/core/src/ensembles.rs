//! Ensembles of preparations, measurements, and the problem reductions
//! between m-state exclusion, single-state exclusion and discrimination.

use crate::error::{Error, Result};
use crate::linalg::{psd_margin, HermitianMatrix, C64};

/// Tolerance on unit traces and probability sums.
pub const NORMALIZATION_TOL: f64 = 1e-8;
/// Smallest eigenvalue accepted for a state or measurement element.
pub const PSD_TOL: f64 = 1e-8;

fn check_dims<'a>(dim: usize, ops: impl IntoIterator<Item = &'a HermitianMatrix>) -> Result<()> {
    for op in ops {
        if op.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: op.dim(),
            });
        }
    }
    Ok(())
}

fn default_labels(k: usize) -> Vec<String> {
    (1..=k).map(|i| i.to_string()).collect()
}

/// A set of preparations `ρ_i` occurring with priors `p_i`.
#[derive(Clone, Debug)]
pub struct Ensemble {
    dim: usize,
    states: Vec<HermitianMatrix>,
    probs: Vec<f64>,
    labels: Vec<String>,
}

impl Ensemble {
    /// Validates unit-trace PSD states, matching dimensions and normalized priors.
    /// Labels default to `"1"..="k"`.
    pub fn new(states: Vec<HermitianMatrix>, probs: Vec<f64>, labels: Option<Vec<String>>) -> Result<Self> {
        let k = states.len();
        if k == 0 {
            return Err(Error::EmptyEnsemble);
        }
        if probs.len() != k {
            return Err(Error::CountMismatch {
                expected: k,
                found: probs.len(),
            });
        }
        let labels = labels.unwrap_or_else(|| default_labels(k));
        if labels.len() != k {
            return Err(Error::CountMismatch {
                expected: k,
                found: labels.len(),
            });
        }
        let dim = states[0].dim();
        check_dims(dim, &states)?;
        for (index, (rho, &p)) in states.iter().zip(&probs).enumerate() {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::NotDensity {
                    index,
                    reason: format!("probability {p} outside [0, 1]"),
                });
            }
            let tr = rho.trace_re();
            if (tr - 1.0).abs() > NORMALIZATION_TOL {
                return Err(Error::NotDensity {
                    index,
                    reason: format!("trace {tr} != 1"),
                });
            }
            let margin = psd_margin(rho);
            if margin < -PSD_TOL {
                return Err(Error::NotDensity {
                    index,
                    reason: format!("minimum eigenvalue {margin:e} < 0"),
                });
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::ProbSum { sum });
        }
        Ok(Self {
            dim,
            states,
            probs,
            labels,
        })
    }

    /// Ensemble of pure states `|ψ_i><ψ_i|`; vectors are normalized first.
    pub fn from_pure_states(vectors: &[Vec<C64>], probs: Vec<f64>, labels: Option<Vec<String>>) -> Result<Self> {
        let states = vectors
            .iter()
            .map(|v| {
                let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                let unit: Vec<C64> = v.iter().map(|z| z / norm).collect();
                HermitianMatrix::projector(&unit)
            })
            .collect();
        Self::new(states, probs, labels)
    }

    /// Uniform priors `1/k`.
    pub fn uniform(states: Vec<HermitianMatrix>, labels: Option<Vec<String>>) -> Result<Self> {
        let k = states.len();
        Self::new(states, vec![1.0 / k.max(1) as f64; k], labels)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[HermitianMatrix] {
        &self.states
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// The weighted operators `ρ̃_i = p_i ρ_i`.
    pub fn weighted(&self) -> WeightedOperators {
        WeightedOperators {
            dim: self.dim,
            operators: self.states.iter().zip(&self.probs).map(|(r, &p)| r.scale(p)).collect(),
            labels: self.labels.clone(),
        }
    }

    /// The same states with items reordered by `perm` (`new[i] = old[perm[i]]`).
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.len() {
            return Err(Error::CountMismatch {
                expected: self.len(),
                found: perm.len(),
            });
        }
        Self::new(
            perm.iter().map(|&i| self.states[i].clone()).collect(),
            perm.iter().map(|&i| self.probs[i]).collect(),
            Some(perm.iter().map(|&i| self.labels[i].clone()).collect()),
        )
    }
}

/// Subnormalized PSD operators standing for `p_i ρ_i`.
///
/// Reductions of an ensemble produce operators whose traces are not one;
/// this is the relaxed carrier accepted by every SDP builder.
#[derive(Clone, Debug)]
pub struct WeightedOperators {
    dim: usize,
    operators: Vec<HermitianMatrix>,
    labels: Vec<String>,
}

impl WeightedOperators {
    pub fn new(operators: Vec<HermitianMatrix>, labels: Option<Vec<String>>) -> Result<Self> {
        let k = operators.len();
        if k == 0 {
            return Err(Error::EmptyEnsemble);
        }
        let labels = labels.unwrap_or_else(|| default_labels(k));
        if labels.len() != k {
            return Err(Error::CountMismatch {
                expected: k,
                found: labels.len(),
            });
        }
        let dim = operators[0].dim();
        check_dims(dim, &operators)?;
        for op in &operators {
            let margin = psd_margin(op);
            if margin < -PSD_TOL {
                return Err(Error::NotPsd { min_eigenvalue: margin });
            }
        }
        Ok(Self { dim, operators, labels })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    pub fn operators(&self) -> &[HermitianMatrix] {
        &self.operators
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn into_operators(self) -> Vec<HermitianMatrix> {
        self.operators
    }

    /// `Σ_i tr ρ̃_i`.
    pub fn total_trace(&self) -> f64 {
        self.operators.iter().map(HermitianMatrix::trace_re).sum()
    }

    /// Operators `ρ̂_Y = Σ_{y∈Y} ρ̃_y` for every size-`m` subset `Y`, in
    /// lexicographic order of index tuples. Labels read `{a,b,...}`.
    pub fn m_state_reduction(&self, m: usize) -> Result<Self> {
        let k = self.len();
        if m == 0 || m > k {
            return Err(Error::BadSubsetSize { m, k });
        }
        let mut operators = Vec::new();
        let mut labels = Vec::new();
        for subset in lexicographic_subsets(k, m) {
            let op = HermitianMatrix::sum(subset.iter().map(|&i| &self.operators[i])).expect("m >= 1");
            operators.push(op);
            let names: Vec<&str> = subset.iter().map(|&i| self.labels[i].as_str()).collect();
            labels.push(format!("{{{}}}", names.join(",")));
        }
        Ok(Self {
            dim: self.dim,
            operators,
            labels,
        })
    }

    /// Discrimination set `ϑ_i = (1/(k-1)) Σ_{j≠i} ρ̃_j`; discriminating it is
    /// equivalent to excluding from the original list.
    pub fn to_discrimination(&self) -> Result<Self> {
        let k = self.len();
        if k < 2 {
            return Err(Error::TooFewStates { k, required: 2 });
        }
        let total = HermitianMatrix::sum(&self.operators).expect("k >= 2");
        let scale = 1.0 / (k - 1) as f64;
        let operators = self.operators.iter().map(|op| total.minus(op).scale(scale)).collect();
        Ok(Self {
            dim: self.dim,
            operators,
            labels: self.labels.clone(),
        })
    }
}

/// All size-`m` subsets of `0..k` as sorted index tuples, lexicographically.
pub fn lexicographic_subsets(k: usize, m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if m == 0 || m > k {
        return out;
    }
    let mut idx: Vec<usize> = (0..m).collect();
    loop {
        out.push(idx.clone());
        let mut i = m;
        while i > 0 && idx[i - 1] == k - m + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        idx[i - 1] += 1;
        for j in i..m {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// PSD operators summing to the identity; the last one may be the
/// inconclusive element `M_?`.
#[derive(Clone, Debug)]
pub struct Measurement {
    elements: Vec<HermitianMatrix>,
    has_inconclusive: bool,
}

impl Measurement {
    pub fn new(elements: Vec<HermitianMatrix>, has_inconclusive: bool) -> Result<Self> {
        let Some(first) = elements.first() else {
            return Err(Error::EmptyEnsemble);
        };
        let dim = first.dim();
        check_dims(dim, &elements)?;
        for m in &elements {
            let margin = psd_margin(m);
            if margin < -PSD_TOL {
                return Err(Error::NotPsd { min_eigenvalue: margin });
            }
        }
        let total = HermitianMatrix::sum(&elements).expect("non-empty");
        let defect = total.max_abs_diff(&HermitianMatrix::identity(dim));
        if defect > NORMALIZATION_TOL {
            return Err(Error::InvalidArgument(format!(
                "measurement elements sum to identity only within {defect:e}"
            )));
        }
        Ok(Self {
            elements,
            has_inconclusive,
        })
    }

    /// Projective measurement onto the computational basis `{|i><i|}`.
    pub fn computational_basis(dim: usize) -> Self {
        let elements = (0..dim)
            .map(|i| {
                let mut d = vec![0.0; dim];
                d[i] = 1.0;
                HermitianMatrix::from_real_diagonal(&d)
            })
            .collect();
        Self {
            elements,
            has_inconclusive: false,
        }
    }

    /// Projective measurement onto the given orthonormal vectors.
    pub fn projective(vectors: &[Vec<C64>]) -> Result<Self> {
        Self::new(vectors.iter().map(|v| HermitianMatrix::projector(v)).collect(), false)
    }

    pub fn dim(&self) -> usize {
        self.elements[0].dim()
    }

    pub fn elements(&self) -> &[HermitianMatrix] {
        &self.elements
    }

    pub fn has_inconclusive(&self) -> bool {
        self.has_inconclusive
    }

    /// Elements attached to exclusion outcomes (all but `M_?`).
    pub fn conclusive(&self) -> &[HermitianMatrix] {
        if self.has_inconclusive {
            &self.elements[..self.elements.len() - 1]
        } else {
            &self.elements
        }
    }

    pub fn inconclusive(&self) -> Option<&HermitianMatrix> {
        self.has_inconclusive.then(|| self.elements.last().expect("non-empty"))
    }
}

fn check_shapes(ops: &WeightedOperators, m: &Measurement) -> Result<()> {
    if m.dim() != ops.dim() {
        return Err(Error::DimensionMismatch {
            expected: ops.dim(),
            found: m.dim(),
        });
    }
    if m.conclusive().len() != ops.len() {
        return Err(Error::CountMismatch {
            expected: ops.len(),
            found: m.conclusive().len(),
        });
    }
    Ok(())
}

/// Exclusion error `α = Σ_i tr[ρ̃_i M_i]`: the probability that the excluded
/// label is the one that was prepared.
pub fn exclusion_error(ops: &WeightedOperators, m: &Measurement) -> Result<f64> {
    check_shapes(ops, m)?;
    Ok(ops
        .operators()
        .iter()
        .zip(m.conclusive())
        .map(|(r, e)| r.inner(e))
        .sum())
}

/// Discrimination error `1 - Σ_i tr[ρ̃_i M_i]` of guessing outcome `i` as the
/// prepared label.
pub fn discrimination_error(ops: &WeightedOperators, m: &Measurement) -> Result<f64> {
    check_shapes(ops, m)?;
    Ok(1.0
        - ops
            .operators()
            .iter()
            .zip(m.conclusive())
            .map(|(r, e)| r.inner(e))
            .sum::<f64>())
}
