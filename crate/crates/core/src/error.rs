use thiserror::Error;

/// Errors raised by the solver core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("operator is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("right-hand side must be e_1 in the working basis")]
    RhsNotBasisVector,

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("zero vector")]
    ZeroVector,

    #[error("vector is not unit-normalized (norm {0})")]
    NotNormalized(f64),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("indefinite matrix requires the ancilla embedding, which is disabled")]
    EmbeddingDisabled,

    #[error("conductivity sampling failed: {0}")]
    Conductivity(String),

    #[error("eigensolver failure: {0}")]
    Eigen(String),
}

pub type Result<T> = std::result::Result<T, Error>;
