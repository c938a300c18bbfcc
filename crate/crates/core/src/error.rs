use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidSpec(String),

    #[error("sample is empty")]
    EmptySample,

    #[error("sample contains a non-finite value at index {0}")]
    NonFiniteSample(usize),

    #[error("invalid quantile grid: {0}")]
    InvalidGrid(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{what}: need at least {needed} points, found {found}")]
    InsufficientPoints {
        what: &'static str,
        needed: usize,
        found: usize,
    },

    #[error("insufficient span for breakpoint detection: {0}")]
    InsufficientSpan(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("{what} = {value} is outside [{lo}, {hi}]")]
    OutOfRange {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular normal equations in least-squares fit")]
    SingularJacobian,

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },

    #[error("Table 1 level p = {0} missing from scaling results")]
    MissingLevel(f64),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<String>, line: u64, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    /// True for errors caused by user input (configuration, table contents)
    /// rather than the filesystem.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Io { .. })
    }
}
