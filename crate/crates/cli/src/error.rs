use thiserror::Error;

/// Failure of a CLI run, classified by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad input; nothing was computed.
    #[error("{0}")]
    Validation(String),

    /// A run started and the numerics failed.
    #[error("{0}")]
    Computation(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn validation(msg: impl Into<String>) -> Self {
        CliError::Validation(msg.into())
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Computation(_) => 3,
            CliError::Io { .. } => 1,
        }
    }
}

impl From<spinbus::Error> for CliError {
    fn from(e: spinbus::Error) -> Self {
        match e {
            spinbus::Error::Integration { .. } | spinbus::Error::Search(_) => {
                CliError::Computation(e.to_string())
            }
            _ => CliError::Validation(e.to_string()),
        }
    }
}
