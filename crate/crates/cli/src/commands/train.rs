//! `train`: fit a field to a surfel cloud, streaming metrics and emitting
//! checkpoints.

use super::{ensure_out_dir, require_file};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::formats::{checkpoint, cloud, ndjson::MetricsWriter};
use std::path::Path;
use udfforge_core::training::TrainState;
use udfforge_core::{NeuralField, SceneTransform};

pub struct TrainArgs<'a> {
    pub cloud_path: &'a Path,
    pub resume: Option<&'a Path>,
    pub out_dir: &'a Path,
}

pub fn run(config: &RunConfig, seed: u64, args: &TrainArgs) -> Result<(), CliError> {
    require_file(args.cloud_path, "surfel cloud")?;
    if let Some(r) = args.resume {
        require_file(r, "resume checkpoint")?;
    }
    ensure_out_dir(args.out_dir)?;

    let mut surfel_cloud = cloud::load_cloud(args.cloud_path)?;
    if surfel_cloud
        .surfels
        .iter()
        .any(|s| s.center.iter().any(|c| c.abs() > 1.0))
    {
        surfel_cloud.normalize(0.9);
    }
    surfel_cloud
        .validate(true)
        .map_err(|e| CliError::usage(format!("{}: {e}", args.cloud_path.display())))?;

    let mut train_config = config.train.clone();
    train_config.seed = seed;
    train_config
        .validate()
        .map_err(|e| CliError::usage(e.to_string()))?;

    let mut state = match args.resume {
        Some(path) => {
            let ck = checkpoint::load_checkpoint(path)?;
            // The checkpoint frame wins when the cloud was not normalized.
            let transform = if surfel_cloud.transform.is_identity() {
                ck.transform
            } else {
                surfel_cloud.transform
            };
            surfel_cloud.transform = transform;
            TrainState::resume(ck.field, surfel_cloud, ck.iter)
        }
        None => {
            let field = NeuralField::init(config.field, seed)
                .map_err(|e| CliError::usage(e.to_string()))?;
            TrainState::new(field, surfel_cloud)
        }
    };

    let metrics_path = args.out_dir.join("metrics.ndjson");
    let mut metrics = MetricsWriter::create(&metrics_path)?;
    let cadence = config.checkpoint_every;
    let out_dir = args.out_dir.to_path_buf();
    let mut observer_error: Option<CliError> = None;
    let transform = state.cloud.transform;
    let log = state.run(&train_config, |field, _cloud, record| {
        if observer_error.is_some() {
            return;
        }
        if let Err(e) = metrics.write(record) {
            observer_error = Some(e.into());
            return;
        }
        let iter = record.iter + 1;
        if cadence > 0 && iter % cadence == 0 && iter < train_config.total_iters {
            let path = out_dir.join(format!("checkpoint_{iter:07}.udfck"));
            if let Err(e) = checkpoint::save_checkpoint(field, &transform, iter, &path) {
                observer_error = Some(e.into());
            }
        }
    });
    if let Some(e) = observer_error {
        return Err(e);
    }
    let log = log.map_err(CliError::from)?;
    metrics.finish()?;

    let final_path = args.out_dir.join("checkpoint.udfck");
    checkpoint::save_checkpoint(&state.field, &state.cloud.transform, state.iter, &final_path)?;
    cloud::save_cloud_text(&state.cloud, &args.out_dir.join("cloud_final.surfels"))?;
    config.echo_into(args.out_dir)?;

    let last = log.last();
    println!(
        "train: {} iterations, final l_far {:?}, l_near {:?}, l_proj {:?} -> {}",
        state.iter,
        last.and_then(|r| r.l_far),
        last.and_then(|r| r.l_near),
        last.and_then(|r| r.l_proj),
        args.out_dir.display()
    );
    Ok(())
}
