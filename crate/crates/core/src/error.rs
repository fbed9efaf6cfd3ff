use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("index {index} out of range for size {size}")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("operation requires a double-well potential")]
    NotDoubleWell,

    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NonHermitian { deviation: f64 },

    #[error("dimension {dim} exceeds the cap of {max}")]
    DimensionTooLarge { dim: usize, max: usize },

    #[error("cannot normalize a zero vector")]
    ZeroNorm,

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("spectral bound violated: max|E|*t = {phase:.4} >= 2π")]
    Aliasing { phase: f64 },

    #[error("chain too short: {len} samples, need at least {min}")]
    ChainTooShort { len: usize, min: usize },

    #[error("position {x} lies outside the box [{lo}, {hi})")]
    OutsideBox { x: f64, lo: f64, hi: f64 },

    #[error("eigendecomposition failed: {0}")]
    Numeric(String),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
