use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown point {0:?}")]
    UnknownPoint(String),

    #[error("unknown block {0}")]
    UnknownBlock(usize),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid family: {0}")]
    InvalidFamily(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("{what} exceeds the limit of {limit}")]
    ResourceLimit { what: String, limit: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable tag used in CLI error objects and FFI codes.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::UnknownPoint(_) | Error::UnknownBlock(_) => "unknown-id",
            Error::InvalidModel(_) => "invalid-model",
            Error::InvalidFamily(_) => "invalid-family",
            Error::InvalidPartition(_) => "invalid-partition",
            Error::InvalidArgument(_) => "invalid-argument",
            Error::Precondition(_) => "precondition",
            Error::ResourceLimit { .. } => "resource-limit",
            Error::Parse(_) | Error::Json(_) => "parse",
            Error::Invariant(_) => "invariant",
            Error::Io(_) => "io",
        }
    }

    pub(crate) fn resource(what: impl Into<String>, limit: usize) -> Self {
        Error::ResourceLimit {
            what: what.into(),
            limit,
        }
    }
}
