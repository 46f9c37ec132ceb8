use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite basis value at x = {0:?}")]
    NonFinite(Vec<f64>),

    #[error("basis vector vanishes at x = {0:?}, optimal weight undefined")]
    ZeroBasisNorm(Vec<f64>),

    #[error("CDF inversion residual {residual:e} exceeds tolerance {tolerance:e}")]
    GridResolution { residual: f64, tolerance: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("no stable sample after {cap} trials (delta = {delta}); observed Z: {observed:?}")]
    RejectionCapExceeded {
        cap: usize,
        delta: f64,
        observed: Vec<f64>,
    },

    #[error("input sample is not stable: Z = {z} > delta = {delta}")]
    UnstableInput { z: f64, delta: f64 },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("candidate Vandermonde has numerical rank {rank} < {required}")]
    RankDeficient { rank: usize, required: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
