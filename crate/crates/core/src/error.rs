use thiserror::Error;

/// Errors raised while building or evaluating exclusion problems.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (max |H - H^dagger| = {residual:e})")]
    NotHermitian { residual: f64 },

    #[error("operator is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("probabilities sum to {sum}, expected 1")]
    ProbSum { sum: f64 },

    #[error("item {index} is not a density operator: {reason}")]
    NotDensity { index: usize, reason: String },

    #[error("expected {expected} items, found {found}")]
    CountMismatch { expected: usize, found: usize },

    #[error("subset size m = {m} must satisfy 1 <= m <= k = {k}")]
    BadSubsetSize { m: usize, k: usize },

    #[error("at least {required} states are required, found {k}")]
    TooFewStates { k: usize, required: usize },

    #[error("ensemble is empty")]
    EmptyEnsemble,

    #[error("the fidelity witness needs k >= 3 states, found k = {k}")]
    DegenerateK { k: usize },

    #[error("eps must lie in (0, 1), got {eps}")]
    BadEps { eps: f64 },

    #[error("problem exceeds the dense scale cap: {what} = {value} > {cap}")]
    ScaleCap {
        what: &'static str,
        value: usize,
        cap: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
