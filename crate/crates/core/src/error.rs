use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("value {value} out of range (limit {limit})")]
    OutOfRange { value: u64, limit: u64 },
    #[error("capacity exceeded: {requested} entries requested, cap is {cap}")]
    Capacity { requested: u64, cap: u64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unknown function name `{0}`")]
    UnknownName(String),
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("split infeasible: {0}")]
    SplitInfeasible(String),
    #[error("overflow: {0}")]
    Overflow(String),
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("format error: {0}")]
    Format(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Format(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}
