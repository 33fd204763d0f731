use std::fmt;
use std::process::ExitCode;

/// Failure classes and their exit codes.
#[derive(Debug, Clone)]
pub enum CliError {
    /// Exit 1.
    Invalid(String),
    /// Exit 2.
    Certification(String),
    /// Exit 3.
    Numerical(String),
}

impl CliError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        CliError::Invalid(msg.into())
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Invalid(_) => 1,
            CliError::Certification(_) => 2,
            CliError::Numerical(_) => 3,
        })
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Invalid(m) => write!(f, "{m}"),
            CliError::Certification(m) => write!(f, "certification failed: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<liapform::Error> for CliError {
    fn from(e: liapform::Error) -> Self {
        let msg = e.to_string();
        if e.is_certification() {
            CliError::Certification(msg)
        } else if e.is_numerical() {
            CliError::Numerical(msg)
        } else {
            CliError::Invalid(msg)
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
