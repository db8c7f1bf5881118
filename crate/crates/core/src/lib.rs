//! Quantum state exclusion as semidefinite programs.
//!
//! The crate formulates minimum-error, unambiguous and worst-case exclusion
//! of one state from a known ensemble, solves them with a primal-dual
//! interior-point method, certifies optimal measurements, computes lower
//! bounds on the exclusion error and analyses the PBR game.
//!
//! ```
//! use qexcl::{ensembles::Ensemble, models::{ExclusionModel, Variant}, solver::{solve, SolveOptions}};
//! use qexcl::linalg::HermitianMatrix;
//!
//! let zero = HermitianMatrix::from_real_diagonal(&[1.0, 0.0]);
//! let one = HermitianMatrix::from_real_diagonal(&[0.0, 1.0]);
//! let ensemble = Ensemble::new(vec![zero, one], vec![0.5, 0.5], None).unwrap();
//! let model = ExclusionModel::build(Variant::MinError, ensemble.weighted().operators().to_vec()).unwrap();
//! let report = solve(&model, &SolveOptions::default()).unwrap();
//! assert!(report.alpha.abs() < 1e-8);
//! ```

pub mod certify;
pub mod ensembles;
pub mod error;
pub mod linalg;
pub mod models;
pub mod pbr;
pub mod random;
pub mod solver;

pub use ensembles::{Ensemble, Measurement, WeightedOperators};
pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, HermitianMatrix, C64};
pub use models::{DualVars, ExclusionModel, PrimalVars, Variant};
pub use solver::{solve, SolveOptions, SolveReport, SolveStatus};
