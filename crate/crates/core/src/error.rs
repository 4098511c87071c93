use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite coordinate in {what}")]
    NonFinite { what: &'static str },

    #[error("orientation vector has norm {norm:e}, too small to normalize")]
    DegenerateOrientation { norm: f64 },

    #[error("matrix is not orthogonal: |QᵀQ - I|_F = {deviation:e}")]
    NotOrthogonal { deviation: f64 },

    #[error("invariant tuple is not realizable: Gram matrix has eigenvalue {min_eigenvalue:e}")]
    UnrealizableTuple { min_eigenvalue: f64 },

    #[error("tangent violates tangency in slot {slot}: dn·n = {residual:e}")]
    TangencyViolation { slot: usize, residual: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite loss at epoch {epoch} (last finite loss {last_finite:e})")]
    NonFiniteLoss { epoch: usize, last_finite: f64 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
