use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HeError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("mode mismatch: expected {expected:?}, found {found:?}")]
    ModeMismatch { expected: crate::params::Mode, found: crate::params::Mode },
    #[error("depth budget exceeded: {depth} > {budget}")]
    DepthExceeded { depth: usize, budget: usize },
    #[error("length mismatch: expected {expected}, found {found}")]
    Length { expected: usize, found: usize },
    #[error("index {index} out of range (limit {limit})")]
    OutOfRange { index: usize, limit: usize },
    #[error("missing key: {0}")]
    MissingKey(String),
    #[error("decryption needs the secret key")]
    NoSecretKey,
    #[error("malformed blob: {0}")]
    Malformed(String),
}
