use thiserror::Error;

/// Errors reported by the library's fallible operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("training set must contain at least one point")]
    EmptyTrainingSet,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("responses length {got} does not match point count {expected}")]
    ResponseCount { expected: usize, got: usize },

    #[error("{what} must be finite")]
    NonFinite { what: &'static str },

    #[error("bandwidth must be positive, got {value}")]
    InvalidBandwidth { value: f64 },

    #[error("regression mode requires responses")]
    MissingResponses,

    #[error("density estimation requires degree k >= d (got k={k}, d={d})")]
    DegreeTooLow { k: usize, d: usize },

    #[error("operation requires a model in {expected} mode")]
    ModeMismatch { expected: &'static str },

    #[error("rank {rank} out of range 1..={size} in dimension {dim}")]
    RankOutOfRange { dim: usize, rank: u32, size: u32 },

    #[error("statistic vector length {got} does not match grid length {expected}")]
    StatLengthMismatch { expected: usize, got: usize },

    #[error(
        "coordinate {value} in dimension {dim} is outside the discretized rank space; \
         rebuild with reserve capacity covering it"
    )]
    UnreservedCoordinate { dim: usize, value: f64 },

    #[error("inserting points into a density model is not supported (all CDF values would change)")]
    DensityInsertUnsupported,

    #[error("rank space too large to index")]
    RankSpaceTooLarge,
}
