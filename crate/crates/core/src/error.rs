use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid cube address: {0}")]
    InvalidCube(String),

    #[error("invalid rectangle: {0}")]
    InvalidRectangle(String),

    #[error("invalid figure: {0}")]
    InvalidFigure(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("dimension {0} out of range")]
    DimensionOutOfRange(usize),

    #[error("resolution mismatch: {0}")]
    Resolution(String),

    #[error("point {0} does not lie on the sampling grid")]
    OffGrid(String),

    #[error("grid values must vanish on the coordinate hyperfacets (nonzero at {0:?})")]
    NotVanishing(Vec<u64>),

    #[error("invalid Hurst parameter {0}: must lie in (0, 1)")]
    InvalidHurst(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("per-axis covariance for axis {axis} is not numerically positive definite after jitter {jitter:e}")]
    NotPositiveDefinite { axis: usize, jitter: f64 },

    #[error("grid of {0} points exceeds the supported size")]
    TooLarge(u128),

    #[error("invalid config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
