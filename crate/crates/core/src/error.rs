use thiserror::Error;

/// Errors surfaced by constructors and numerical routines.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("state vector norm {norm} is not 1 within tolerance")]
    NotNormalized { norm: f64 },

    #[error("expected {expected} angles, got {got}")]
    WrongAngleCount { expected: usize, got: usize },

    #[error("expected {expected} parameters, got {got}")]
    WrongParameterCount { expected: usize, got: usize },

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("level indices must be distinct and inside the computational space")]
    BadLevelPair,

    #[error("tuple of length {len} is not a permutation of 0..{len}")]
    NotAPermutation { len: usize },

    #[error("group of order {order} exceeds the product-space limit {limit}")]
    GroupTooLarge { order: usize, limit: usize },

    #[error("group element has no matrix representation of the requested kind")]
    MissingRepresentation,

    #[error("value {value} outside valid range for {what}")]
    OutOfDomain { what: &'static str, value: f64 },

    #[error("{what} must be positive, got {value}")]
    NotPositive { what: &'static str, value: f64 },

    #[error("duration {duration_us} us is not an integer number of {dt_ns} ns samples")]
    UnalignedDuration { duration_us: f64, dt_ns: f64 },

    #[error("need at least {needed} samples, got {got}")]
    UnderSampled { needed: usize, got: usize },

    #[error("fit data is degenerate: fewer than three distinct abscissae")]
    DegenerateData,

    #[error("need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("cost function returned a non-finite value at the initial point")]
    NonFiniteCost,

    #[error("linear solve hit a numerically singular pivot")]
    SingularMatrix,

    #[error("{0}")]
    Invalid(String),
}
