use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    /// Members of differing dimension, or an empty family.
    #[error("invalid family: {0}")]
    InvalidFamily(String),

    #[error("digit stream exhausted: requested bit {requested}, {available} available")]
    StreamUnderflow { requested: usize, available: usize },

    #[error("design exhausted: requested {requested} states, only {available} exist")]
    ExhaustedDesign { requested: usize, available: usize },

    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),

    #[error("numeric failure: {0}")]
    NumericFailure(String),

    #[error("degenerate spectrum: {0}")]
    DegenerateSpectrum(String),

    #[error("rank-deficient Gram matrix (smallest eigenvalue {0:e})")]
    RankDeficient(f64),

    #[error("state lies outside the span of the family (residual {0:e})")]
    SpanViolation(f64),

    #[error("null history: {0}")]
    NullHistory(String),

    #[error("invalid branch set: {0}")]
    InvalidBranch(String),

    #[error("problem too large: {0}")]
    TooLarge(String),

    #[error("inverse SNR undefined: off-diagonal mean is zero")]
    UndefinedSnr,

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
