use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("index out of bounds: {0}")]
    IndexBounds(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("pair coherent state tail {tail:e} exceeds tolerance {tolerance:e} at cutoff {cutoff}")]
    PcsTail {
        tail: f64,
        tolerance: f64,
        cutoff: usize,
    },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("integration failure at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("truncation leak {leak:e} exceeds limit {limit:e} at t = {t}")]
    Truncation { leak: f64, limit: f64, t: f64 },

    #[error("numerical failure at t = {t}: {reason}")]
    Numerical { t: f64, reason: String },

    #[error("trajectory {index} failed: {source}")]
    Trajectory {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("validation error at `{path}`: {message}")]
    Validation { path: String, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serialization(String),
}

/// Coarse error classes used for process exit codes and machine-readable
/// error reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    Input,
    Integration,
    Truncation,
    Io,
}

impl ErrorCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCategory::Config => "config",
            ErrorCategory::Input => "input",
            ErrorCategory::Integration => "integration",
            ErrorCategory::Truncation => "truncation",
            ErrorCategory::Io => "io",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCategory::Input => 1,
            ErrorCategory::Config => 2,
            ErrorCategory::Integration => 3,
            ErrorCategory::Truncation => 4,
            ErrorCategory::Io => 5,
        }
    }
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Config(_) | Error::Validation { .. } => ErrorCategory::Config,
            Error::Integration { .. } | Error::Numerical { .. } => ErrorCategory::Integration,
            Error::Truncation { .. } => ErrorCategory::Truncation,
            Error::Io(_) | Error::Serialization(_) => ErrorCategory::Io,
            Error::Trajectory { source, .. } => source.category(),
            Error::IndexBounds(_)
            | Error::Dimension { .. }
            | Error::Domain(_)
            | Error::PcsTail { .. }
            | Error::Parameter(_) => ErrorCategory::Input,
        }
    }

    pub(crate) fn validation(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            path: path.into(),
            message: message.into(),
        }
    }
}
