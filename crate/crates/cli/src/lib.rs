//! File formats and configuration for the `udfforge` command-line tool.
//!
//! The numerical engine lives in `udfforge-core`; this crate adds everything
//! that touches the filesystem: surfel cloud files, field checkpoints, grid
//! volumes, OBJ meshes, point lists, newline-delimited metrics logs, and the
//! JSON run configuration.

pub mod commands;
pub mod config;
pub mod error;
pub mod formats;

pub use config::RunConfig;
pub use error::CliError;
