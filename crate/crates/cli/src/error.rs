use std::path::PathBuf;

use fdout_core::FdError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("ParseError: {path}: line {line}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        column: usize,
        message: String,
    },
    #[error("ShapeMismatch: {0}")]
    ShapeMismatch(String),
    #[error("IoError: {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Core(#[from] FdError),
    #[error("InconsistentReport: {0}")]
    InconsistentReport(String),
    #[error("UsageError: {0}")]
    Usage(String),
    #[error("JsonError: {path}: {message}")]
    Json { path: PathBuf, message: String },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Parse { .. } => "ParseError",
            CliError::ShapeMismatch(_) => "ShapeMismatch",
            CliError::Io { .. } => "IoError",
            CliError::Core(e) => e.kind(),
            CliError::InconsistentReport(_) => "InconsistentReport",
            CliError::Usage(_) => "UsageError",
            CliError::Json { .. } => "JsonError",
        }
    }

    /// 3 for numerical failures, 2 for everything attributable to the input.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numeric() => 3,
            _ => 2,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
