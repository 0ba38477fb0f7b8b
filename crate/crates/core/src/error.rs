use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid parameters or an unsupported combination of components.
    #[error("configuration error: {0}")]
    Config(String),

    /// A caller broke a documented precondition (dimension mismatch,
    /// non-finite input, unrevealed data requested).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A bound's hypotheses do not hold for the given constants.
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// The benchmark set of the instance is empty.
    #[error("benchmark set is empty")]
    InfeasibleBenchmark,

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

pub(crate) fn contract<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Contract(msg.into()))
}
