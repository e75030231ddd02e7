use ni_freebody::Error;

/// Process exit code for a successful run; the verdict is in the report.
pub const EXIT_OK: i32 = 0;
pub const EXIT_OUTPUT: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_PRECONDITION: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Unreadable, malformed or invalid input files and arguments.
    #[error("input error: {0}")]
    Input(String),
    /// The inputs parsed but do not meet the analysis preconditions.
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("output error: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Precondition(_) => EXIT_PRECONDITION,
            CliError::Output(_) => EXIT_OUTPUT,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::DimensionMismatch(_)
            | Error::NonSymmetric { .. }
            | Error::NotPd { .. }
            | Error::InvalidArgument(_) => CliError::Input(e.to_string()),
            other => CliError::Precondition(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Output(e.to_string())
    }
}
