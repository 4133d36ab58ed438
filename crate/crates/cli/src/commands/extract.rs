//! `extract`: mesh the zero level set of a trained field.

use super::{default_iso_band, ensure_out_dir, require_file};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::formats::{checkpoint, mesh};
use std::path::Path;
use udfforge_core::geometry::{extract_mesh, Aabb};

pub fn run(config: &RunConfig, checkpoint_path: &Path, out_dir: &Path) -> Result<(), CliError> {
    require_file(checkpoint_path, "checkpoint")?;
    ensure_out_dir(out_dir)?;
    let ck = checkpoint::load_checkpoint(checkpoint_path)?;
    let bbox = Aabb {
        min: config.extract.bbox_min,
        max: config.extract.bbox_max,
    };
    bbox.validate().map_err(CliError::from)?;
    let res = config.extract.resolution;
    let band = config
        .extract
        .iso_band
        .unwrap_or_else(|| default_iso_band(&bbox, res));
    let (extracted, stats) = extract_mesh(&ck.field, &bbox, [res; 3], band)?;
    let obj_path = out_dir.join("mesh.obj");
    mesh::save_obj(&extracted, &obj_path)?;
    let loops = mesh::save_boundary_obj(&extracted, &out_dir.join("mesh_boundary.obj"))?;
    config.echo_into(out_dir)?;
    if extracted.is_empty() {
        println!(
            "extract: empty mesh (no gradient crossings inside band {band:.4}); \
             crossing_edges={} skipped_cubes={}",
            stats.crossing_edges, stats.skipped_cubes
        );
    } else {
        println!(
            "extract: {} vertices, {} triangles, {} boundary edges in {} chains \
             (crossings {}, skipped cubes {}) -> {}",
            extracted.vertices.len(),
            extracted.triangles.len(),
            extracted.boundary_edges.len(),
            loops,
            stats.crossing_edges,
            stats.skipped_cubes,
            obj_path.display()
        );
    }
    Ok(())
}
