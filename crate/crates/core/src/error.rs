use thiserror::Error;

/// Every failure the synthesis library can report.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("numerical failure in {op}: {detail}")]
    Numerical { op: &'static str, detail: String },

    #[error("precondition violated in {op}: {detail}")]
    Precondition { op: &'static str, detail: String },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("disconnected coupling map, components: {0:?}")]
    Disconnected(Vec<Vec<usize>>),

    #[error("format error: {0}")]
    Format(String),

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("internal invariant broken: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn numerical(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Numerical { op, detail: detail.into() }
    }

    pub(crate) fn precondition(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Precondition { op, detail: detail.into() }
    }
}
