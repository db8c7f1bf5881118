//! Spectral functions of Hermitian operators and the norms built on them.

use super::eigen::{eig_hermitian, Spectrum};
use super::matrix::{ComplexMatrix, HermitianMatrix, C64};
use crate::error::{Error, Result};

/// Eigenvalues in `[-CLAMP_TOL, 0)` are treated as rounding noise and set to zero.
pub const CLAMP_TOL: f64 = 1e-9;
/// Eigenvalues below `-NOT_PSD_TOL` reject the input as not PSD.
pub const NOT_PSD_TOL: f64 = 1e-6;

/// Eigenvalues of a PSD operator below this multiple of the largest one are
/// indistinguishable from zero at double precision.
const NUMERICAL_ZERO: f64 = 64.0 * f64::EPSILON;

fn check_square(m: &ComplexMatrix) -> Result<()> {
    if m.is_square() {
        Ok(())
    } else {
        Err(Error::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        })
    }
}

fn check_same_dim(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<()> {
    if a.dim() == b.dim() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        })
    }
}

/// Spectrum of a PSD operator with rounding noise removed: negative
/// eigenvalues down to `-NOT_PSD_TOL` and positive ones at the noise floor
/// are set to zero.
fn psd_spectrum(p: &HermitianMatrix) -> Result<Spectrum> {
    let mut spectrum = eig_hermitian(p);
    let lambda_min = spectrum.min();
    let scale = spectrum.max().abs().max(1.0);
    if lambda_min < -NOT_PSD_TOL * scale {
        return Err(Error::NotPsd {
            min_eigenvalue: lambda_min,
        });
    }
    let floor = NUMERICAL_ZERO * spectrum.max().max(0.0);
    for l in spectrum.eigenvalues.iter_mut() {
        if *l <= floor {
            *l = 0.0;
        }
    }
    Ok(spectrum)
}

/// Minimum eigenvalue; `H >= 0` exactly when this is non-negative.
pub fn psd_margin(h: &HermitianMatrix) -> f64 {
    eig_hermitian(h).min()
}

/// Positive square root of a PSD operator.
pub fn sqrt_psd(p: &HermitianMatrix) -> Result<HermitianMatrix> {
    Ok(psd_spectrum(p)?.map(f64::sqrt))
}

/// Operator absolute value `|H| = Σ |λ_i| |u_i><u_i|`.
pub fn abs_hermitian(h: &HermitianMatrix) -> HermitianMatrix {
    eig_hermitian(h).map(f64::abs)
}

/// `min(A, B) = ½ [A + B - |A - B|]`, dominated by both arguments.
pub fn min_op(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<HermitianMatrix> {
    check_same_dim(a, b)?;
    let abs_diff = abs_hermitian(&a.minus(b));
    Ok(a.plus(b).minus(&abs_diff).scale(0.5))
}

/// Kronecker product.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kron(b)
}

/// Singular values of a square matrix, descending, from the spectrum of `M^dagger M`.
fn singular_system(m: &ComplexMatrix) -> Result<Spectrum> {
    check_square(m)?;
    let gram = m.adjoint_mul(m).hermitian_part();
    let mut spectrum = psd_spectrum(&gram)?;
    for l in spectrum.eigenvalues.iter_mut() {
        *l = l.sqrt();
    }
    Ok(spectrum)
}

/// Trace norm `‖M‖_Tr`, the sum of singular values.
pub fn trace_norm(m: &ComplexMatrix) -> Result<f64> {
    Ok(singular_system(m)?.eigenvalues.iter().sum())
}

/// Fidelity `F(ρ, σ) = tr √(√ρ σ √ρ)` (unsquared; equals `|<ψ|φ>|` on pure states).
///
/// Arguments only need to be PSD; subnormalized operators are accepted.
pub fn fidelity(rho: &HermitianMatrix, sigma: &HermitianMatrix) -> Result<f64> {
    check_same_dim(rho, sigma)?;
    let sqrt_rho = sqrt_psd(rho)?;
    // Validate sigma before it is sandwiched.
    psd_spectrum(sigma)?;
    let inner = sigma.congruence(&sqrt_rho);
    Ok(psd_spectrum(&inner)?.eigenvalues.iter().map(|l| l.sqrt()).sum())
}

/// Unitary `U` maximizing `Re tr[M U]`; the maximum equals `‖M‖_Tr`.
///
/// With `M = W Σ V^dagger` the maximizer is `U = V W^dagger`. Right singular
/// vectors come from `M^dagger M`; left ones are `M v_i / σ_i` on the range and,
/// on the null space, the null eigenvectors of `M M^dagger` paired in index
/// order. The columns of `W` are then re-orthonormalized in that order.
pub fn polar_unitary(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let right = singular_system(m)?;
    let n = m.rows();
    let rank = right.eigenvalues.iter().take_while(|&&s| s > 0.0).count();

    let mut left_cols: Vec<Vec<C64>> = Vec::with_capacity(n);
    for k in 0..rank {
        let v = right.eigenvector(k);
        let mv = m * &ComplexMatrix::column(&v);
        let inv = 1.0 / right.eigenvalues[k];
        left_cols.push(mv.data().iter().map(|z| z * inv).collect());
    }
    if rank < n {
        let outer = eig_hermitian(&(m * &m.adjoint()).hermitian_part());
        for k in rank..n {
            left_cols.push(outer.eigenvector(k));
        }
    }
    let w = orthonormalize_columns(&left_cols);
    let v = &right.eigenvectors;
    Ok(v * &w.adjoint())
}

/// Modified Gram-Schmidt in column order. A column that collapses numerically
/// is replaced by the first standard basis vector with a non-trivial
/// component outside the span built so far.
fn orthonormalize_columns(cols: &[Vec<C64>]) -> ComplexMatrix {
    let n = cols.len();
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(n);
    let project_out = |v: &mut Vec<C64>, basis: &[Vec<C64>]| {
        for b in basis {
            let dot: C64 = b.iter().zip(v.iter()).map(|(x, y)| x.conj() * y).sum();
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= dot * bi;
            }
        }
    };
    let norm = |v: &[C64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for col in cols {
        let mut v = col.clone();
        project_out(&mut v, &basis);
        project_out(&mut v, &basis);
        let mut len = norm(&v);
        if len < 1e-8 {
            for e in 0..n {
                let mut cand = vec![C64::new(0.0, 0.0); n];
                cand[e] = C64::new(1.0, 0.0);
                project_out(&mut cand, &basis);
                project_out(&mut cand, &basis);
                let l = norm(&cand);
                if l > 0.5 {
                    v = cand;
                    len = l;
                    break;
                }
            }
        }
        basis.push(v.into_iter().map(|z| z / len).collect());
    }
    ComplexMatrix::from_fn(n, n, |r, c| basis[c][r])
}
