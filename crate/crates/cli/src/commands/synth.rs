//! `synth`: generate a synthetic surfel scene with its oracle and ground
//! truth samples.

use super::{ensure_out_dir, require_file};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::formats::{cloud, xyz};
use std::path::Path;
use udfforge_core::surfel::{gen_scene, SceneKind};

pub fn run(config: &RunConfig, seed: u64, out_dir: &Path) -> Result<(), CliError> {
    let kind: SceneKind = config
        .synth
        .kind
        .parse()
        .map_err(|e| CliError::usage(format!("{e}")))?;
    ensure_out_dir(out_dir)?;
    let scene = gen_scene(
        kind,
        config.synth.count,
        config.synth.noise,
        seed,
        &config.synth.shape,
    )
    .map_err(|e| CliError::usage(e.to_string()))?;

    let cloud_path = out_dir.join(if config.synth.binary {
        "cloud.surfels.bin"
    } else {
        "cloud.surfels"
    });
    if config.synth.binary {
        cloud::save_cloud_binary(&scene.cloud, &cloud_path)?;
    } else {
        cloud::save_cloud_text(&scene.cloud, &cloud_path)?;
    }
    xyz::save_xyz(&scene.gt_samples, &out_dir.join("gt.xyz"))?;
    let oracle_json = serde_json::to_string_pretty(&scene.oracle)
        .map_err(|e| CliError::runtime(e.to_string()))?;
    std::fs::write(out_dir.join("oracle.json"), oracle_json + "\n")
        .map_err(|e| CliError::runtime(e.to_string()))?;
    config.echo_into(out_dir)?;
    require_file(&cloud_path, "generated cloud")?;
    println!(
        "synth: {} surfels ({}), noise {}, oracle {:?} -> {}",
        scene.cloud.len(),
        config.synth.kind,
        config.synth.noise,
        scene.oracle,
        out_dir.display()
    );
    Ok(())
}
