use std::path::PathBuf;

use qcp_core::Error as CoreError;

/// Failure of a CLI run, grouped by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("solver: {0}")]
    Solver(CoreError),

    #[error("fit: {0}")]
    Fit(CoreError),

    #[error("{failed} oracle check(s) failed")]
    OracleFailed { failed: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io { .. } | CliError::Parse { .. } => 2,
            CliError::Solver(_) => 3,
            CliError::Fit(_) => 4,
            CliError::OracleFailed { .. } => 1,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

impl From<CoreError> for CliError {
    /// Parameter problems are configuration errors; everything else reaching
    /// this conversion came from a solve.
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidParameter(msg) => CliError::Config(msg),
            e => CliError::Solver(e),
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

/// Wraps errors from the fitting routines.
pub fn fit_err(e: CoreError) -> CliError {
    match e {
        CoreError::InvalidParameter(msg) => CliError::Config(msg),
        e => CliError::Fit(e),
    }
}
