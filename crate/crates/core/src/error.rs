use std::path::PathBuf;

/// Errors produced across the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("i/o error: {0}")]
    Stream(#[from] std::io::Error),

    #[error("suspicious input: {malformed} of {lines} lines malformed; sample: {sample:?}")]
    SuspiciousInput {
        lines: usize,
        malformed: usize,
        sample: Vec<String>,
    },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("unknown user: {0}")]
    UnknownUser(String),

    #[error("undefined statistic: {0}")]
    Undefined(String),

    #[error("capacity: {0}")]
    Capacity(String),

    #[error("integrity: {0}")]
    Integrity(String),

    #[error("empty area: no track point has a nonzero {threshold_kt} kt radius")]
    EmptyArea { threshold_kt: u32 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
