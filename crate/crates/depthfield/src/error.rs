use std::fmt;
use std::io;
use std::path::PathBuf;

/// Error type shared by the whole crate.
#[derive(Debug)]
pub enum Error {
    /// A domain precondition was violated (bad grid size, nonpositive depth, ...).
    Invalid(String),
    /// Two fields that must share dimensions do not.
    DimensionMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    /// A serialized file is malformed.
    Format(String),
    /// A configuration file could not be parsed.
    Config { line: usize, message: String },
    /// Wrapped I/O error with the offending path when known.
    Io {
        path: Option<PathBuf>,
        source: io::Error,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Invalid(msg) => write!(f, "invalid input: {msg}"),
            Error::DimensionMismatch { expected, got } => write!(
                f,
                "dimension mismatch: expected {}x{}, got {}x{}",
                expected.0, expected.1, got.0, got.1
            ),
            Error::Format(msg) => write!(f, "format error: {msg}"),
            Error::Config { line, message } => write!(f, "config line {line}: {message}"),
            Error::Io { path: Some(p), source } => write!(f, "{}: {source}", p.display()),
            Error::Io { path: None, source } => write!(f, "i/o error: {source}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io { source, .. } => Some(source),
            _ => None,
        }
    }
}

impl From<io::Error> for Error {
    fn from(source: io::Error) -> Self {
        Error::Io { path: None, source }
    }
}

impl Error {
    pub fn io_at(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: Some(path.into()),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
