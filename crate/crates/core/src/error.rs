use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: max |a_ij - conj(a_ji)| = {max_asymmetry:e}")]
    NotHermitian { max_asymmetry: f64 },

    #[error("dimension {dim} exceeds the configured maximum of {max}")]
    DimensionOverflow { dim: usize, max: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("not a density operator: {0}")]
    NotDensityOperator(String),

    #[error("invalid ensemble: {0}")]
    InvalidEnsemble(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid bit subset: {0}")]
    InvalidSubset(String),

    #[error("invalid key: {0}")]
    InvalidKey(String),

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    #[error("ensemble states do not commute (max commutator entry {0:e}); use the Holevo bound or the iterative solver")]
    NonCommuting(f64),

    #[error("conditioning on known key bits with zero probability")]
    ZeroProbabilityCondition,

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("malformed JSON at line {line}, column {column}: {message}")]
    Json { line: usize, column: usize, message: String },

    #[error("invalid field `{path}`: {message}")]
    Schema { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
