use std::fmt::Display;
use std::io;
use std::path::PathBuf;

/// Everything a command can fail with. The variant decides the exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// A configuration problem, located by a field path such as
    /// `model.flows[2].rate`.
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("cannot read `{}`: {source}", path.display())]
    Read { path: PathBuf, source: io::Error },
    #[error("cannot write `{}`: {source}", path.display())]
    Write { path: PathBuf, source: io::Error },
    #[error("cannot write `{}`: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
    /// The computation itself failed, for example by leaving the domain.
    #[error("{0}")]
    Runtime(String),
    #[error("verification failed")]
    VerifyFailed,
}

impl CliError {
    /// 2 for bad input, 3 for runtime failures, 1 for a failed verification.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Invalid { .. } | CliError::Read { .. } => 2,
            CliError::Write { .. } | CliError::Csv { .. } | CliError::Runtime(_) => 3,
            CliError::VerifyFailed => 1,
        }
    }
}

pub fn invalid(path: impl Into<String>, message: impl Display) -> CliError {
    CliError::Invalid {
        path: path.into(),
        message: message.to_string(),
    }
}

pub fn runtime(message: impl Display) -> CliError {
    CliError::Runtime(message.to_string())
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
