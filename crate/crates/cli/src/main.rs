//! Command-line entry point.

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use udfforge::{commands, CliError, RunConfig};

#[derive(Parser)]
#[command(
    name = "udfforge",
    version,
    about = "Learn unsigned distance fields from surfel clouds and extract open surfaces"
)]
struct Cli {
    /// JSON config file; command-line flags override config values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Random seed (fallbacks: config file, UDFFORGE_SEED, 0).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker cap; 1 (the default) is the deterministic ordered path.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic surfel scene with its oracle and ground truth.
    Synth {
        /// Scene kind: disk, sphere, sheets, curved.
        #[arg(long)]
        kind: Option<String>,
        /// Number of surfels.
        #[arg(long)]
        n: Option<usize>,
        /// Center noise sigma in normalized units.
        #[arg(long)]
        noise: Option<f64>,
        /// Write the binary cloud variant.
        #[arg(long)]
        binary: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a field against a surfel cloud.
    Train {
        #[arg(long)]
        cloud: PathBuf,
        /// Override the total iteration budget.
        #[arg(long)]
        iters: Option<usize>,
        /// Continue from a checkpoint (iteration counter resumes).
        #[arg(long)]
        resume: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract an open-surface mesh from a trained field.
    Extract {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Lattice resolution per axis.
        #[arg(long)]
        res: Option<usize>,
        /// Crossing band in scene units (default: two cell diagonals).
        #[arg(long)]
        iso_band: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pull a point cloud onto the zero level set, step by step.
    Deform {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Input xyz file; omit to use random cube points.
        #[arg(long)]
        points: Option<PathBuf>,
        /// Random cube point count when no input file is given.
        #[arg(long)]
        random: Option<usize>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        fraction: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a trained field against an oracle and ground truth.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Oracle descriptor JSON written by synth.
        #[arg(long)]
        oracle: PathBuf,
        /// Ground-truth surface samples (xyz).
        #[arg(long)]
        gt: PathBuf,
        /// Lattice resolution for the band error.
        #[arg(long)]
        res: Option<usize>,
        #[arg(long)]
        band: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Export the field as a raw f32 volume with a JSON sidecar.
    ExportField {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        res: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn resolve_seed(flag: Option<u64>, config: &RunConfig) -> Result<u64, CliError> {
    if let Some(s) = flag {
        return Ok(s);
    }
    if let Some(s) = config.seed {
        return Ok(s);
    }
    match std::env::var("UDFFORGE_SEED") {
        Ok(v) => v
            .parse()
            .map_err(|_| CliError::usage(format!("UDFFORGE_SEED is not an integer: '{v}'"))),
        Err(_) => Ok(0),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(t) = cli.threads {
        config.threads = t;
    }
    let seed = resolve_seed(cli.seed, &config)?;
    config.seed = Some(seed);
    config.train.seed = seed;
    config.validate()?;

    match &cli.command {
        Command::Synth {
            kind,
            n,
            noise,
            binary,
            out,
        } => {
            if let Some(k) = kind {
                config.synth.kind = k.clone();
            }
            if let Some(n) = n {
                config.synth.count = *n;
            }
            if let Some(s) = noise {
                config.synth.noise = *s;
            }
            if *binary {
                config.synth.binary = true;
            }
            commands::synth::run(&config, seed, out)
        }
        Command::Train {
            cloud,
            iters,
            resume,
            out,
        } => {
            if let Some(i) = iters {
                config.train.total_iters = *i;
            }
            config.validate()?;
            commands::train::run(
                &config,
                seed,
                &commands::train::TrainArgs {
                    cloud_path: cloud,
                    resume: resume.as_deref(),
                    out_dir: out,
                },
            )
        }
        Command::Extract {
            checkpoint,
            res,
            iso_band,
            out,
        } => {
            if let Some(r) = res {
                config.extract.resolution = *r;
            }
            if iso_band.is_some() {
                config.extract.iso_band = *iso_band;
            }
            commands::extract::run(&config, checkpoint, out)
        }
        Command::Deform {
            checkpoint,
            points,
            random,
            steps,
            fraction,
            out,
        } => {
            if let Some(n) = random {
                config.deform.count = *n;
            }
            if let Some(s) = steps {
                config.deform.steps = *s;
            }
            if let Some(f) = fraction {
                config.deform.step_fraction = *f;
            }
            config.validate()?;
            commands::deform::run(
                &config,
                seed,
                &commands::deform::DeformArgs {
                    checkpoint_path: checkpoint,
                    points_path: points.as_deref(),
                    out_dir: out,
                },
            )
        }
        Command::Eval {
            checkpoint,
            oracle,
            gt,
            res,
            band,
            out,
        } => {
            if let Some(r) = res {
                config.eval.resolution = *r;
            }
            if let Some(b) = band {
                config.eval.band = *b;
            }
            commands::eval::run(
                &config,
                seed,
                &commands::eval::EvalArgs {
                    checkpoint_path: checkpoint,
                    oracle_path: oracle,
                    gt_path: gt,
                    out_dir: out,
                },
            )
        }
        Command::ExportField {
            checkpoint,
            res,
            out,
        } => {
            if let Some(r) = res {
                config.export_field.resolution = *r;
            }
            commands::export_field::run(&config, checkpoint, out)
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
