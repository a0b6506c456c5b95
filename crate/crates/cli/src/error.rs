use std::process::ExitCode;

/// Failure classes, each mapped to a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags, unreadable or invalid configuration, missing inputs.
    #[error("{0}")]
    Usage(String),
    /// Simulation or estimation failed.
    #[error("{0}")]
    Runtime(String),
    /// Validation ran and at least one criterion failed.
    #[error("validation failed")]
    ValidationFailed,
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::ValidationFailed => 1,
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 3,
        })
    }

    pub fn usage(msg: impl std::fmt::Display) -> Self {
        CliError::Usage(msg.to_string())
    }

    pub fn runtime(msg: impl std::fmt::Display) -> Self {
        CliError::Runtime(msg.to_string())
    }
}

impl From<mimic_core::Error> for CliError {
    fn from(e: mimic_core::Error) -> Self {
        use mimic_core::Error as E;
        match e {
            E::Argument(_) | E::OffGrid { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
