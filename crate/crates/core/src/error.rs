use alloc::string::String;

/// Errors produced by the estimation core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A parameter record violates its invariants (k = 0, t <= 0, bad probabilities, ...).
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    /// Input data violates an invariant (zero count, duplicate bucket, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// A ratio or summary is undefined because nothing was observed.
    #[error("empty input: {0}")]
    EmptyInput(String),
    /// The held-out split cannot be formed.
    #[error("split error: {0}")]
    Split(String),
    /// An intermediate value left the range of `f64`.
    #[error("numeric range error: {0}")]
    NumericRange(String),
    /// An item required by the clustering step has no embedding vector.
    #[error("missing embedding vector for item {0:?}")]
    MissingVector(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
