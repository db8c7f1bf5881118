//! Cholesky factorizations used by the interior-point solver.

use super::matrix::{ComplexMatrix, HermitianMatrix, C64};

/// Lower-triangular factor `L` with `A = L L^dagger`, or `None` when `A` is
/// not numerically positive definite.
pub fn cholesky(a: &HermitianMatrix) -> Option<ComplexMatrix> {
    let n = a.dim();
    let mut l = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let mut diag = a[(j, j)].re;
        for k in 0..j {
            diag -= l[(j, k)].norm_sqr();
        }
        if !(diag > 0.0) || !diag.is_finite() {
            return None;
        }
        let ljj = diag.sqrt();
        l[(j, j)] = C64::new(ljj, 0.0);
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / ljj;
        }
    }
    Some(l)
}

/// Inverse of a lower-triangular matrix.
pub fn lower_inverse(l: &ComplexMatrix) -> ComplexMatrix {
    let n = l.rows();
    let mut inv = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        inv[(j, j)] = C64::new(1.0, 0.0) / l[(j, j)];
        for i in j + 1..n {
            let mut s = C64::new(0.0, 0.0);
            for k in j..i {
                s += l[(i, k)] * inv[(k, j)];
            }
            inv[(i, j)] = -s / l[(i, i)];
        }
    }
    inv
}

/// Inverse of a Hermitian positive definite matrix.
pub fn hpd_inverse(a: &HermitianMatrix) -> Option<HermitianMatrix> {
    let l = cholesky(a)?;
    let linv = lower_inverse(&l);
    Some(linv.adjoint_mul(&linv).hermitian_part())
}

/// Dense real symmetric positive definite system, stored row-major.
#[derive(Clone, Debug)]
pub struct RealCholesky {
    n: usize,
    l: Vec<f64>,
}

impl RealCholesky {
    /// Factors `a` (row-major `n x n`), adding `shift` to the diagonal.
    pub fn factor(a: &[f64], n: usize, shift: f64) -> Option<Self> {
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut diag = a[j * n + j] + shift;
            for k in 0..j {
                diag -= l[j * n + k] * l[j * n + k];
            }
            if !(diag > 0.0) || !diag.is_finite() {
                return None;
            }
            let ljj = diag.sqrt();
            l[j * n + j] = ljj;
            for i in j + 1..n {
                let mut s = a[i * n + j];
                let (ri, rj) = (&l[i * n..i * n + j], &l[j * n..j * n + j]);
                for (x, y) in ri.iter().zip(rj) {
                    s -= x * y;
                }
                l[i * n + j] = s / ljj;
            }
        }
        Some(Self { n, l })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[i * n + k] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= self.l[k * n + i] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_density, rng_from_seed};

    #[test]
    fn complex_cholesky_roundtrip_and_inverse() {
        let mut rng = rng_from_seed(21);
        let a = random_density(&mut rng, 5).plus(&HermitianMatrix::identity(5).scale(0.1));
        let l = cholesky(&a).unwrap();
        assert!((&l * &l.adjoint()).max_abs_diff(&a) < 1e-14);
        let inv = hpd_inverse(&a).unwrap();
        assert!((&*inv * &*a).max_abs_diff(&ComplexMatrix::identity(5)) < 1e-10);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = HermitianMatrix::from_real_diagonal(&[1.0, -1e-3]);
        assert!(cholesky(&a).is_none());
    }

    #[test]
    fn real_solve() {
        let a = [4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0];
        let f = RealCholesky::factor(&a, 3, 0.0).unwrap();
        let x = f.solve(&[1.0, 2.0, 3.0]);
        for i in 0..3 {
            let row: f64 = (0..3).map(|j| a[i * 3 + j] * x[j]).sum();
            assert!((row - [1.0, 2.0, 3.0][i]).abs() < 1e-13);
        }
        assert!(RealCholesky::factor(&[-1.0], 1, 0.0).is_none());
    }
}
