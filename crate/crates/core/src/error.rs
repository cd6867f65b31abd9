use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    /// The median heuristic found no spread in the data.
    #[error("degenerate scale: {0}")]
    DegenerateScale(String),

    #[error("numerical rank deficiency: {0}")]
    RankDeficient(String),

    #[error("optimisation diverged at step {step}: {detail}")]
    Divergence { step: usize, detail: String },

    #[error("parse error at {location}: {detail}")]
    Parse { location: String, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn mismatch(what: impl Into<String>) -> Error {
    Error::DimensionMismatch(what.into())
}

pub(crate) fn invalid(what: impl Into<String>) -> Error {
    Error::InvalidArgument(what.into())
}
