use std::fs;
use std::path::{Path, PathBuf};

use retinex_core::finetune::DEFAULT_ITERATIONS;
use retinex_core::{AdjustmentParams, GuideConfig, LossWeights, SolverConfig};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Everything a run needs; every field has a default so a config file may be partial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub solver: SolverConfig,
    pub weights: LossWeights,
    pub guide: GuideConfig,
    pub adjustment_init: AdjustmentParams,
    pub finetune_enabled: bool,
    pub finetune_iters: usize,
    pub apply_gc: bool,
    pub output_dir: PathBuf,
    pub emit_stage_trace: bool,
    /// Also write the reflectance, illumination and LBS map as PNGs.
    pub save_layers: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            weights: LossWeights::default(),
            guide: GuideConfig::default(),
            adjustment_init: AdjustmentParams::default(),
            finetune_enabled: false,
            finetune_iters: DEFAULT_ITERATIONS,
            apply_gc: false,
            output_dir: PathBuf::from("out"),
            emit_stage_trace: false,
            save_layers: false,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config {
            path: path.to_owned(),
            detail: e.to_string(),
        })?;
        let cfg: RunConfig = serde_json::from_str(&text).map_err(|e| CliError::Config {
            path: path.to_owned(),
            detail: e.to_string(),
        })?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.solver.validate().map_err(CliError::InvalidConfig)?;
        self.weights.validate().map_err(CliError::InvalidConfig)?;
        self.guide.validate().map_err(CliError::InvalidConfig)?;
        self.adjustment_init.validate().map_err(CliError::InvalidConfig)?;
        if self.finetune_iters == 0 {
            return Err(CliError::InvalidConfig(retinex_core::Error::param(
                "finetune_iters",
                "must be >= 1",
            )));
        }
        Ok(())
    }
}
