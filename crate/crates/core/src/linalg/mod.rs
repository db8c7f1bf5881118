//! Dense complex linear algebra for Hermitian operators.
//!
//! Everything downstream (fidelities, operator minima, PSD margins and the
//! interior-point Newton steps) is expressed with these types.

mod cholesky;
mod eigen;
mod functions;
mod matrix;

pub use cholesky::{cholesky, hpd_inverse, lower_inverse, RealCholesky};
pub use eigen::{eig_hermitian, Spectrum};
pub use functions::{
    abs_hermitian, fidelity, min_op, polar_unitary, psd_margin, sqrt_psd, tensor, trace_norm, CLAMP_TOL, NOT_PSD_TOL,
};
pub use matrix::{ComplexMatrix, HermitianMatrix, C64, HERMITIAN_TOL};
