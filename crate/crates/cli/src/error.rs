use thiserror::Error;

/// Exit status of a run that produced its outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// A solver stopped without meeting its tolerances.
    NotConverged,
    /// A refinement study was not monotone or fell short of its order.
    Flagged,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::NotConverged => 3,
            Status::Flagged => 4,
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    /// The configuration is invalid; `field` is the dotted key path.
    #[error("{field}: {message}")]
    Config { field: String, message: String },

    #[error("{path}: {message}")]
    Io { path: String, message: String },

    #[error(transparent)]
    Numeric(#[from] fracdelay::Error),
}

impl CliError {
    pub fn config(field: impl Into<String>, message: impl ToString) -> Self {
        CliError::Config {
            field: field.into(),
            message: message.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Io { .. } | CliError::Numeric(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
