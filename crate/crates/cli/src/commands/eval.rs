//! `eval`: quantitative report of a trained field against an analytic oracle
//! and ground-truth surface samples.

use super::{default_iso_band, ensure_out_dir, require_file};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::formats::{checkpoint, xyz};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::path::Path;
use udfforge_core::field::AnalyticField;
use udfforge_core::geometry::{extract_mesh, extract_surface_points, mesh_boundary_loops, Aabb};
use udfforge_core::metrics::{chamfer, grad_check, udf_error, ChamferMode, EvalReport};

pub struct EvalArgs<'a> {
    pub checkpoint_path: &'a Path,
    pub oracle_path: &'a Path,
    pub gt_path: &'a Path,
    pub out_dir: &'a Path,
}

#[derive(Serialize)]
struct ReportDocument<'a> {
    #[serde(flatten)]
    report: &'a EvalReport,
    config: &'a RunConfig,
}

pub fn run(config: &RunConfig, seed: u64, args: &EvalArgs) -> Result<(), CliError> {
    require_file(args.checkpoint_path, "checkpoint")?;
    require_file(args.oracle_path, "oracle descriptor")?;
    require_file(args.gt_path, "ground-truth samples")?;
    ensure_out_dir(args.out_dir)?;

    let ck = checkpoint::load_checkpoint(args.checkpoint_path)?;
    let oracle: AnalyticField = {
        let text = std::fs::read_to_string(args.oracle_path)
            .map_err(|e| CliError::usage(format!("{}: {e}", args.oracle_path.display())))?;
        serde_json::from_str(&text).map_err(|e| {
            CliError::usage(format!(
                "{}:{}:{}: {e}",
                args.oracle_path.display(),
                e.line(),
                e.column()
            ))
        })?
    };
    let gt = xyz::load_xyz(args.gt_path)?;
    if gt.is_empty() {
        return Err(CliError::usage("ground-truth point set is empty"));
    }

    let bbox = Aabb::unit_cube();
    let e = &config.eval;
    let (mae, max) = udf_error(&ck.field, &oracle, &bbox, [e.resolution; 3], e.band)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grad_err = grad_check(&ck.field, e.grad_check_points, &mut rng)?;
    let surface = extract_surface_points(&ck.field, e.extract_count, e.residual_threshold, &mut rng);
    if surface.points.is_empty() {
        return Err(CliError::runtime(
            "surface extraction kept no points below the residual threshold",
        ));
    }
    let cd = chamfer(&surface.points, &gt, ChamferMode::Euclidean)?;
    let band = default_iso_band(&bbox, e.mesh_resolution);
    let (mesh, _stats) = extract_mesh(&ck.field, &bbox, [e.mesh_resolution; 3], band)?;
    let loops = mesh_boundary_loops(&mesh);

    let report = EvalReport {
        chamfer: cd,
        udf_mae_band: mae,
        udf_max_band: max,
        grad_check_max_rel_err: grad_err,
        boundary_loop_count: loops.len(),
    };
    let doc = ReportDocument {
        report: &report,
        config,
    };
    let json =
        serde_json::to_string_pretty(&doc).map_err(|e| CliError::runtime(e.to_string()))?;
    std::fs::write(args.out_dir.join("report.json"), json + "\n")
        .map_err(|e| CliError::runtime(e.to_string()))?;
    config.echo_into(args.out_dir)?;

    println!("eval report");
    println!("  chamfer (euclidean)      {:.6}", report.chamfer);
    println!("  udf mae (band {:.2})      {:.6}", e.band, report.udf_mae_band);
    println!("  udf max (band {:.2})      {:.6}", e.band, report.udf_max_band);
    println!("  grad check max rel err   {:.3e}", report.grad_check_max_rel_err);
    println!("  boundary loops           {}", report.boundary_loop_count);
    println!("  surface kept fraction    {:.3}", surface.kept_fraction);
    Ok(())
}
