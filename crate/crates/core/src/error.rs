use thiserror::Error;

/// Errors raised by the combinatorial and numerical layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid datum: {0}")]
    InvalidDatum(String),
    #[error("empty input")]
    EmptyInput,
    #[error("factor {index} has dimension 1 and no simple factor")]
    TrivialFactor { index: usize },
    #[error("datum is not castlable: largest dimension {largest} >= N = {n}")]
    NotCastlable { largest: String, n: String },
    #[error("castled dimension {0} does not fit in 64 bits")]
    DimensionOverflow(String),
    #[error("factor {index} is not positive definite")]
    NotPositiveDefinite { index: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("statistic for factor {index} is numerically singular (eigenvalue ratio {ratio:e})")]
    DegenerateStatistic { index: usize, ratio: f64 },
    #[error("product of dimensions {0} exceeds the desk-scale limit of 4096")]
    DeskScaleExceeded(u128),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("malformed sample file: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
