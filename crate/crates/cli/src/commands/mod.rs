//! Command implementations. Each command validates its paths first, writes
//! all outputs into its `--out` directory, and echoes the effective config
//! there for provenance.

pub mod deform;
pub mod eval;
pub mod export_field;
pub mod extract;
pub mod synth;
pub mod train;

use crate::error::CliError;
use std::path::Path;

pub(crate) fn ensure_out_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::usage(format!("cannot create output dir {}: {e}", dir.display())))
}

pub(crate) fn require_file(path: &Path, what: &str) -> Result<(), CliError> {
    if !path.is_file() {
        return Err(CliError::usage(format!(
            "{what} not found: {}",
            path.display()
        )));
    }
    Ok(())
}

pub(crate) fn default_iso_band(bbox: &udfforge_core::geometry::Aabb, res: usize) -> f64 {
    // Two grid cell diagonals.
    let e = bbox.extent();
    let steps = (res - 1) as f64;
    let cell = [e[0] / steps, e[1] / steps, e[2] / steps];
    2.0 * (cell[0] * cell[0] + cell[1] * cell[1] + cell[2] * cell[2]).sqrt()
}
