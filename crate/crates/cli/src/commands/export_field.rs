//! `export-field`: dense field sampling to a raw volume for visualization.

use super::{ensure_out_dir, require_file};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::formats::{checkpoint, grid};
use std::path::Path;
use udfforge_core::geometry::{eval_grid, Aabb};

pub fn run(config: &RunConfig, checkpoint_path: &Path, out_dir: &Path) -> Result<(), CliError> {
    require_file(checkpoint_path, "checkpoint")?;
    ensure_out_dir(out_dir)?;
    let ck = checkpoint::load_checkpoint(checkpoint_path)?;
    let bbox = Aabb {
        min: config.export_field.bbox_min,
        max: config.export_field.bbox_max,
    };
    let res = config.export_field.resolution;
    let g = eval_grid(&ck.field, &bbox, [res; 3])?;
    let (vol, sidecar) = grid::save_grid(&g, &out_dir.join("field"))?;
    config.echo_into(out_dir)?;
    println!(
        "export-field: {res}^3 volume ({} bytes) -> {} (+ {})",
        res * res * res * 4,
        vol.display(),
        sidecar.display()
    );
    Ok(())
}
