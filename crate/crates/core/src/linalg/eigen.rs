//! Cyclic Jacobi eigendecomposition of dense Hermitian matrices.
//!
//! Each rotation first removes the phase of the pivot `h_pq` and then applies
//! a real symmetric Schur rotation, so the working matrix stays exactly
//! Hermitian. Sweeps visit pivots in row-major order `(0,1), (0,2), ...`.

use super::matrix::{ComplexMatrix, HermitianMatrix, C64};

const MAX_SWEEPS: usize = 100;

/// Eigen-decomposition `H = V diag(eigenvalues) V^dagger`, eigenvalues descending.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    /// Unitary matrix whose columns are the eigenvectors.
    pub eigenvectors: ComplexMatrix,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    /// `V f(Λ) V^dagger`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> HermitianMatrix {
        let values: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        self.assemble(&values)
    }

    /// `V diag(values) V^dagger`.
    pub fn assemble(&self, values: &[f64]) -> HermitianMatrix {
        let n = self.dim();
        let v = &self.eigenvectors;
        let mut out = ComplexMatrix::zeros(n, n);
        for (k, &lambda) in values.iter().enumerate() {
            if lambda == 0.0 {
                continue;
            }
            for r in 0..n {
                let vr = v[(r, k)] * lambda;
                for c in r..n {
                    out[(r, c)] += vr * v[(c, k)].conj();
                }
            }
        }
        for r in 0..n {
            for c in 0..r {
                out[(r, c)] = out[(c, r)].conj();
            }
        }
        out.hermitian_part()
    }

    pub fn reconstruct(&self) -> HermitianMatrix {
        self.assemble(&self.eigenvalues)
    }

    pub fn eigenvector(&self, k: usize) -> Vec<C64> {
        self.eigenvectors.column_vec(k)
    }
}

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
pub fn eig_hermitian(h: &HermitianMatrix) -> Spectrum {
    let n = h.dim();
    let mut a = h.as_matrix().clone();
    let mut v = ComplexMatrix::identity(n);

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                if rotate(&mut a, &mut v, p, q) {
                    rotated = true;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[j].total_cmp(&diag[i]).then(i.cmp(&j)));
    let eigenvalues = order.iter().map(|&i| diag[i]).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Spectrum {
        eigenvalues,
        eigenvectors,
    }
}

/// Annihilates `a[p][q]` unless it is already negligible; returns whether a
/// rotation was applied.
///
/// An element is negligible when `|a_pq| <= eps * sqrt(|a_pp| |a_qq|)`, which
/// yields eigenvalues accurate relative to their own magnitude rather than to
/// the norm of the matrix.
fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) -> bool {
    let n = a.rows();
    let apq = a[(p, q)];
    let r = apq.norm();
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    if r <= f64::EPSILON * (app.abs() * aqq.abs()).sqrt() || r < f64::MIN_POSITIVE * 1e4 {
        if r != 0.0 {
            a[(p, q)] = C64::new(0.0, 0.0);
            a[(q, p)] = C64::new(0.0, 0.0);
        }
        return false;
    }
    let phase = apq / r;

    // Real symmetric Schur rotation for [[app, r], [r, aqq]].
    let tau = (aqq - app) / (2.0 * r);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let cs = 1.0 / (1.0 + t * t).sqrt();
    let sn = t * cs;

    // G = diag(1, conj(phase)) [[cs, sn], [-sn, cs]].
    let g_pp = C64::new(cs, 0.0);
    let g_pq = C64::new(sn, 0.0);
    let g_qp = phase.conj() * (-sn);
    let g_qq = phase.conj() * cs;

    // A <- A G (columns p, q).
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * g_pp + akq * g_qp;
        a[(k, q)] = akp * g_pq + akq * g_qq;
    }
    // A <- G^dagger A (rows p, q).
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = g_pp.conj() * apk + g_qp.conj() * aqk;
        a[(q, k)] = g_pq.conj() * apk + g_qq.conj() * aqk;
    }
    a[(p, p)] = C64::new(app - t * r, 0.0);
    a[(q, q)] = C64::new(aqq + t * r, 0.0);
    a[(p, q)] = C64::new(0.0, 0.0);
    a[(q, p)] = C64::new(0.0, 0.0);

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * g_pp + vkq * g_qp;
        v[(k, q)] = vkp * g_pq + vkq * g_qq;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_hermitian, rng_from_seed};

    fn unitarity_defect(v: &ComplexMatrix) -> f64 {
        v.adjoint_mul(v).max_abs_diff(&ComplexMatrix::identity(v.rows()))
    }

    #[test]
    fn identity_has_unit_spectrum() {
        let s = eig_hermitian(&HermitianMatrix::identity(2));
        assert_eq!(s.eigenvalues, vec![1.0, 1.0]);
    }

    #[test]
    fn pauli_x_has_plus_minus_one() {
        let x = ComplexMatrix::from_rows(&[
            vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
            vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
        ])
        .unwrap();
        let s = eig_hermitian(&HermitianMatrix::new(x).unwrap());
        assert!((s.eigenvalues[0] - 1.0).abs() < 1e-15);
        assert!((s.eigenvalues[1] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn pauli_y_complex_pivot() {
        let y = ComplexMatrix::from_rows(&[
            vec![C64::new(0.0, 0.0), C64::new(0.0, -1.0)],
            vec![C64::new(0.0, 1.0), C64::new(0.0, 0.0)],
        ])
        .unwrap();
        let h = HermitianMatrix::new(y).unwrap();
        let s = eig_hermitian(&h);
        assert!((s.eigenvalues[0] - 1.0).abs() < 1e-15);
        assert!(s.reconstruct().max_abs_diff(&h) < 1e-15);
    }

    #[test]
    fn random_reconstruction_and_unitarity() {
        let mut rng = rng_from_seed(11);
        for &d in &[1usize, 2, 3, 6, 17, 64] {
            let h = random_hermitian(&mut rng, d);
            let s = eig_hermitian(&h);
            let scale = h.max_abs().max(1.0);
            assert!(s.reconstruct().max_abs_diff(&h) <= 1e-9 * scale, "d = {d}");
            assert!(unitarity_defect(&s.eigenvectors) <= 1e-9, "d = {d}");
            assert!(s.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn tiny_eigenvalues_are_resolved_relative_to_themselves() {
        // diag(1, 1e-20) in a rotated basis.
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let u = ComplexMatrix::from_rows(&[
            vec![C64::new(s, 0.0), C64::new(0.0, s)],
            vec![C64::new(0.0, s), C64::new(s, 0.0)],
        ])
        .unwrap();
        let d = ComplexMatrix::from_real_diagonal(&[1.0, 0.0]);
        let h = (&(&u * &d) * &u.adjoint()).hermitian_part();
        let spectrum = eig_hermitian(&h);
        assert!(spectrum.eigenvalues[1].abs() < 1e-16);
    }
}
