//! On-disk formats: surfel clouds, field checkpoints, grid volumes, OBJ
//! meshes, xyz point lists, and newline-delimited metrics logs.

pub mod checkpoint;
pub mod cloud;
pub mod grid;
pub mod mesh;
pub mod ndjson;
pub mod xyz;

use thiserror::Error;

#[derive(Error, Debug)]
pub enum FormatError {
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("{path}: {msg}")]
    Invalid { path: String, msg: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl FormatError {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        FormatError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub(crate) fn parse(path: &std::path::Path, line: usize, msg: impl Into<String>) -> Self {
        FormatError::Parse {
            path: path.display().to_string(),
            line,
            msg: msg.into(),
        }
    }

    pub(crate) fn invalid(path: &std::path::Path, msg: impl Into<String>) -> Self {
        FormatError::Invalid {
            path: path.display().to_string(),
            msg: msg.into(),
        }
    }
}

impl From<FormatError> for crate::error::CliError {
    fn from(e: FormatError) -> Self {
        crate::error::CliError::Usage(e.to_string())
    }
}
