use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("tag `{0}` is already registered")]
    DuplicateTag(String),

    #[error("tag `{0}` is not registered")]
    UnknownTag(String),

    #[error("protocol violation: {0}")]
    ProtocolViolation(String),

    /// A configuration or experiment-spec problem attributable to one field.
    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("malformed input at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidArgument(message.into())
    }

    /// Errors that stem from user-supplied configuration rather than from
    /// the run itself. The CLI maps these to exit code 2.
    pub fn is_spec_error(&self) -> bool {
        matches!(self, Error::Config { .. } | Error::Parse { .. })
    }
}
