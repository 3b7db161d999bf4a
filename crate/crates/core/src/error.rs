use thiserror::Error;

/// Errors raised by geometric operations and the layers built on them.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A point is not on the upper sheet of the hyperboloid.
    #[error("invalid point: {0}")]
    InvalidPoint(String),
    /// An input violates an operation's precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// Parallel transport between (numerically) antipodal points.
    #[error("degenerate transport: {0}")]
    DegenerateTransport(String),
    /// A Schläfli symbol or Gram matrix whose geometry is not handled.
    #[error("unsupported geometry: {0}")]
    UnsupportedGeometry(String),
    /// Malformed text input (scripts, scene files, configs).
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// The message without the category prefix.
    pub fn message(&self) -> &str {
        match self {
            Error::InvalidPoint(m)
            | Error::Precondition(m)
            | Error::DegenerateTransport(m)
            | Error::UnsupportedGeometry(m)
            | Error::Parse(m)
            | Error::Io(m) => m,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn precondition<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Precondition(msg.into()))
}
