use thiserror::Error;

/// Errors raised by every fallible operation in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("resolution error: {0}")]
    Resolution(String),
    #[error("no common ancestor within the lattice range")]
    NoCommonAncestor,
    #[error("invalid sigma-algebra: {0}")]
    InvalidSigma(String),
    #[error("stopping measure condition fails at gen {gen} coords {coords:?} (ratio {ratio})")]
    StoppingMeasure {
        gen: i32,
        coords: Vec<i64>,
        ratio: f64,
    },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("non-integrable weight: {0}")]
    NonIntegrable(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
