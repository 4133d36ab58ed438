//! Run configuration: a versioned JSON document with one section per
//! command. Command-line flags override config values; the merged result is
//! echoed into every output directory.

use crate::error::CliError;
use serde::{Deserialize, Serialize};
use std::path::Path;
use udfforge_core::surfel::GenParams;
use udfforge_core::training::TrainConfig;
use udfforge_core::FieldArch;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    /// Seed fallback order: `--seed` flag, this field, `UDFFORGE_SEED`, 0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Worker cap. The engine runs the deterministic ordered path; 1 is the
    /// contractual deterministic setting.
    #[serde(default = "default_threads")]
    pub threads: usize,
    #[serde(default)]
    pub field: FieldArch,
    #[serde(default)]
    pub train: TrainConfig,
    /// Emit an intermediate checkpoint every N iterations (0: final only).
    #[serde(default)]
    pub checkpoint_every: usize,
    #[serde(default)]
    pub synth: SynthSection,
    #[serde(default)]
    pub extract: ExtractSection,
    #[serde(default)]
    pub deform: DeformSection,
    #[serde(default)]
    pub eval: EvalSection,
    #[serde(default)]
    pub export_field: ExportFieldSection,
}

fn default_threads() -> usize {
    1
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            seed: None,
            threads: 1,
            field: FieldArch::default(),
            train: TrainConfig::default(),
            checkpoint_every: 0,
            synth: SynthSection::default(),
            extract: ExtractSection::default(),
            deform: DeformSection::default(),
            eval: EvalSection::default(),
            export_field: ExportFieldSection::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    pub kind: String,
    pub count: usize,
    pub noise: f64,
    pub shape: GenParams,
    /// Write the binary cloud variant instead of the text format.
    pub binary: bool,
}

impl Default for SynthSection {
    fn default() -> Self {
        Self {
            kind: "disk".into(),
            count: 2000,
            noise: 0.0,
            shape: GenParams::default(),
            binary: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractSection {
    pub resolution: usize,
    /// Crossing band in scene units; absent means two grid cell diagonals.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iso_band: Option<f64>,
    pub bbox_min: [f64; 3],
    pub bbox_max: [f64; 3],
}

impl Default for ExtractSection {
    fn default() -> Self {
        Self {
            resolution: 64,
            iso_band: None,
            bbox_min: [-1.0; 3],
            bbox_max: [1.0; 3],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct DeformSection {
    pub steps: usize,
    pub step_fraction: f64,
    /// Point count when sampling random cube points.
    pub count: usize,
}

impl Default for DeformSection {
    fn default() -> Self {
        Self {
            steps: 20,
            step_fraction: 0.5,
            count: 10_000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    /// Lattice resolution for the band-restricted field error.
    pub resolution: usize,
    pub band: f64,
    pub grad_check_points: usize,
    /// Random points attempted by surface extraction.
    pub extract_count: usize,
    pub residual_threshold: f64,
    /// Mesh resolution used for the boundary-loop count.
    pub mesh_resolution: usize,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self {
            resolution: 48,
            band: 0.3,
            grad_check_points: 100,
            extract_count: 15_000,
            residual_threshold: 0.01,
            mesh_resolution: 64,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ExportFieldSection {
    pub resolution: usize,
    pub bbox_min: [f64; 3],
    pub bbox_max: [f64; 3],
}

impl Default for ExportFieldSection {
    fn default() -> Self {
        Self {
            resolution: 32,
            bbox_min: [-1.0; 3],
            bbox_max: [1.0; 3],
        }
    }
}

impl RunConfig {
    /// Loads and validates a config file; parse errors carry line numbers.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::usage(format!("cannot read config {}: {e}", path.display()))
        })?;
        let cfg: RunConfig = serde_json::from_str(&text).map_err(|e| {
            CliError::usage(format!(
                "{}:{}:{}: {}",
                path.display(),
                e.line(),
                e.column(),
                e
            ))
        })?;
        if cfg.version != CONFIG_VERSION {
            return Err(CliError::usage(format!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                cfg.version
            )));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.threads == 0 {
            return Err(CliError::usage("threads must be at least 1"));
        }
        self.field
            .validate()
            .map_err(|e| CliError::usage(e.to_string()))?;
        self.train
            .validate()
            .map_err(|e| CliError::usage(e.to_string()))?;
        if !(self.deform.step_fraction > 0.0 && self.deform.step_fraction <= 1.0) {
            return Err(CliError::usage("deform.step_fraction must be in (0, 1]"));
        }
        Ok(())
    }

    /// Writes the merged config into the output directory for provenance.
    pub fn echo_into(&self, out_dir: &Path) -> Result<(), CliError> {
        let path = out_dir.join("effective_config.json");
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::runtime(format!("serializing config: {e}")))?;
        std::fs::write(&path, json + "\n")
            .map_err(|e| CliError::runtime(format!("writing {}: {e}", path.display())))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_roundtrips() {
        let cfg = RunConfig::default();
        let json = serde_json::to_string(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let json = r#"{"version": 1, "surprise": true}"#;
        assert!(serde_json::from_str::<RunConfig>(json).is_err());
        let json = r#"{"version": 1, "train": {"lambda_far": 1.0, "oops": 2}}"#;
        assert!(serde_json::from_str::<RunConfig>(json).is_err());
    }

    #[test]
    fn partial_sections_use_defaults() {
        let json = r#"{"version": 1, "train": {"total_iters": 123}}"#;
        let cfg: RunConfig = serde_json::from_str(json).unwrap();
        assert_eq!(cfg.train.total_iters, 123);
        assert_eq!(cfg.train.lambda_far, 1.0);
        assert_eq!(cfg.extract.resolution, 64);
    }
}
