//! `deform`: pull a point cloud onto the zero level set of a trained field,
//! writing one xyz file per step.

use super::{ensure_out_dir, require_file};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::formats::{checkpoint, xyz};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::Path;
use udfforge_core::geometry::deform_cloud;
use udfforge_core::math::Vec3;
use udfforge_core::training::DEFAULT_EPS_GRAD;

pub struct DeformArgs<'a> {
    pub checkpoint_path: &'a Path,
    /// Input points; absent means random cube points.
    pub points_path: Option<&'a Path>,
    pub out_dir: &'a Path,
}

pub fn run(config: &RunConfig, seed: u64, args: &DeformArgs) -> Result<(), CliError> {
    require_file(args.checkpoint_path, "checkpoint")?;
    if let Some(p) = args.points_path {
        require_file(p, "input points")?;
    }
    ensure_out_dir(args.out_dir)?;
    let ck = checkpoint::load_checkpoint(args.checkpoint_path)?;
    let points: Vec<Vec3> = match args.points_path {
        Some(p) => xyz::load_xyz(p)?,
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..config.deform.count)
                .map(|_| {
                    [
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                    ]
                })
                .collect()
        }
    };
    if points.is_empty() {
        return Err(CliError::usage("no input points to deform"));
    }
    let trace = deform_cloud(
        &ck.field,
        &points,
        config.deform.steps,
        config.deform.step_fraction,
        DEFAULT_EPS_GRAD,
    )?;
    for (i, step) in trace.steps.iter().enumerate() {
        xyz::save_xyz(step, &args.out_dir.join(format!("step_{i:03}.xyz")))?;
    }
    config.echo_into(args.out_dir)?;
    println!("deform: {} points, {} steps", points.len(), config.deform.steps);
    for (i, r) in trace.mean_residuals.iter().enumerate() {
        println!("  step {i:3}  mean residual {r:.6}");
    }
    Ok(())
}
