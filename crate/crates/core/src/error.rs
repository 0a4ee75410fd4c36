use thiserror::Error;

/// Errors raised by the library surface.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown coordinate `{0}`")]
    UnknownCoordinate(String),
    #[error("coordinate `{0}` appears more than once")]
    DuplicateCoordinate(String),
    #[error("coordinate sets overlap on `{0}`")]
    OverlappingCoordinates(String),
    #[error("probabilities sum to {sum} (row {row})")]
    NotNormalized { row: usize, sum: f64 },
    #[error("negative or non-finite probability {value} at index {index}")]
    InvalidProbability { index: usize, value: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("alphabet must contain at least one symbol")]
    EmptyAlphabet,
    #[error("alphabet of size {size} exceeds the configured cap {cap}")]
    AlphabetTooLarge { size: usize, cap: usize },
    #[error("channel precondition violated: {0}")]
    Precondition(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("channel spec: {0}")]
    Spec(String),
}

pub type Result<T> = std::result::Result<T, Error>;
