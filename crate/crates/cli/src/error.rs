use std::process::ExitCode;

use pucp_core::Error as CoreError;

/// Process outcome; the numeric codes are part of the interface.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Pass = 0,
    ChainFailure = 1,
    Schema = 2,
    NonConvergence = 3,
}

impl ExitStatus {
    pub fn code(self) -> u8 {
        self as u8
    }
}

impl From<ExitStatus> for ExitCode {
    fn from(s: ExitStatus) -> Self {
        ExitCode::from(s.code())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Unreadable or schema-invalid configuration or input file.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("non-convergence: {0}")]
    NonConvergence(String),

    #[error(transparent)]
    Core(CoreError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::NeumannMaxIter { .. } => CliError::NonConvergence(e.to_string()),
            e => CliError::Core(e),
        }
    }
}

impl CliError {
    pub fn status(&self) -> ExitStatus {
        match self {
            CliError::Config(_) => ExitStatus::Schema,
            CliError::NonConvergence(_) => ExitStatus::NonConvergence,
            CliError::Core(_) | CliError::Io(_) => ExitStatus::ChainFailure,
        }
    }

    /// Errors from reading an input field are input errors, not chain failures.
    pub fn input(e: CoreError) -> Self {
        CliError::Config(e.to_string())
    }
}
