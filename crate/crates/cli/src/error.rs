//! Error taxonomy mapped to process exit codes.

use thiserror::Error;

/// Exit code 2: the invocation itself is wrong (bad flags, malformed config,
/// missing or unparsable input files). Exit code 1: a runtime failure after
/// inputs were accepted.
#[derive(Error, Debug)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn runtime(msg: impl Into<String>) -> Self {
        CliError::Runtime(msg.into())
    }
}

impl From<udfforge_core::training::TrainError> for CliError {
    fn from(e: udfforge_core::training::TrainError) -> Self {
        match e {
            udfforge_core::training::TrainError::InvalidConfig(_) => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<udfforge_core::geometry::GeometryError> for CliError {
    fn from(e: udfforge_core::geometry::GeometryError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<udfforge_core::metrics::MetricsError> for CliError {
    fn from(e: udfforge_core::metrics::MetricsError) -> Self {
        CliError::Runtime(e.to_string())
    }
}
