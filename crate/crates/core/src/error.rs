use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("modulus mismatch: {0} vs {1}")]
    ModulusMismatch(usize, usize),

    #[error("invalid modulus p = {0} (must be odd and positive)")]
    InvalidModulus(usize),

    #[error("exponent {exp} out of range for p = {p}")]
    ExponentOutOfRange { exp: usize, p: usize },

    #[error("element is not invertible")]
    NotInvertible,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("block weight {weight} exceeds circulant size {p}")]
    BlockTooHeavy { weight: usize, p: usize },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("key generation gave up after {0} attempts")]
    ResampleLimitExceeded(usize),

    #[error("decoding failed after {iterations} iterations")]
    DecodeFailure { iterations: usize },

    #[error("density evolution probes are not monotone in the channel parameter: {0}")]
    NonMonotone(String),

    #[error("density grid mismatch")]
    GridMismatch,

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
