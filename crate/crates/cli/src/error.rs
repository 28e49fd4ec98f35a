use thiserror::Error;

/// CLI failure classes, mapped onto process exit codes: usage and data
/// problems exit 2, internal faults exit 1.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Data(_) => 2,
            CliError::Internal(_) => 1,
        }
    }
}

impl From<fastlpr::Error> for CliError {
    fn from(err: fastlpr::Error) -> Self {
        use fastlpr::Error::*;
        match err {
            // Contract violations between modules are bugs, not user input.
            RankOutOfRange { .. } | StatLengthMismatch { .. } | RankSpaceTooLarge => {
                CliError::Internal(err.to_string())
            }
            _ => CliError::Data(err.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Data(err.to_string())
    }
}
