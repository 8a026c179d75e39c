use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the toolkit.
///
/// Each variant maps to a coarse [`ErrorCategory`] that the command line
/// front end turns into an exit code.
#[derive(Debug, Error)]
pub enum MirgError {
    #[error("parameter out of domain: {0}")]
    Parameter(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("degenerate weights: layer {layer} has zero total weight")]
    DegenerateWeights { layer: usize },

    #[error("degenerate tail: order statistic X_({index}) is zero (k too deep into a discrete sample)")]
    DegenerateTail { index: usize },

    #[error("index out of range: {0}")]
    Range(String),

    #[error("point on the cone, polar transform undefined: {0}")]
    OnCone(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid input data: {0}")]
    Format(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Coarse error class used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Parameter,
    Data,
    Numeric,
    Unsupported,
    Io,
}

impl ErrorCategory {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCategory::Parameter => 2,
            ErrorCategory::Data => 3,
            ErrorCategory::Numeric => 4,
            ErrorCategory::Unsupported => 5,
            ErrorCategory::Io => 6,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ErrorCategory::Parameter => "parameter",
            ErrorCategory::Data => "data",
            ErrorCategory::Numeric => "numeric",
            ErrorCategory::Unsupported => "unsupported",
            ErrorCategory::Io => "io",
        }
    }
}

impl MirgError {
    pub fn category(&self) -> ErrorCategory {
        match self {
            MirgError::Parameter(_) | MirgError::Config(_) | MirgError::Range(_) => {
                ErrorCategory::Parameter
            }
            MirgError::Shape(_) | MirgError::Format(_) => ErrorCategory::Data,
            MirgError::DegenerateWeights { .. }
            | MirgError::DegenerateTail { .. }
            | MirgError::OnCone(_) => ErrorCategory::Numeric,
            MirgError::Unsupported(_) => ErrorCategory::Unsupported,
            MirgError::Io { .. } => ErrorCategory::Io,
        }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        MirgError::Parameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        MirgError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<csv::Error> for MirgError {
    fn from(err: csv::Error) -> Self {
        MirgError::Format(err.to_string())
    }
}

pub type Result<T, E = MirgError> = std::result::Result<T, E>;
