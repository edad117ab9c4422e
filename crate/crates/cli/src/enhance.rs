use std::fs;
use std::path::{Path, PathBuf};

use retinex_core::adjust::lbs_predict;
use retinex_core::finetune::{enhance_with, finetune, synthesize_guide};
use retinex_core::plane::to_gray;
use retinex_core::solver::decompose;
use retinex_core::{AdjustmentParams, ColorImage, DecompositionState};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, InPhase, Phase};
use crate::io::{load_image, save_image, save_plane};

/// Files written by one `enhance` run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnhanceOutputs {
    pub enhanced: PathBuf,
    pub summary: PathBuf,
    pub stage_trace: Option<PathBuf>,
    pub layers: Option<[PathBuf; 3]>,
}

#[derive(Debug, Serialize)]
struct Summary<'a> {
    input: &'a str,
    params: AdjustmentParams,
    finetuned: bool,
    finetune_loss_trace: Option<&'a [f64]>,
    final_objective: f64,
    mean_luma_in: f64,
    mean_luma_out: f64,
}

#[derive(Debug, Serialize)]
struct StageRow {
    stage: usize,
    objective: f64,
    l_halvings: u32,
    r_halvings: u32,
    exhausted: bool,
}

/// Result of the in-memory pipeline, before anything is written.
#[derive(Debug, Clone)]
pub struct Enhancement {
    pub enhanced: ColorImage,
    pub params: AdjustmentParams,
    pub finetune_loss_trace: Option<Vec<f64>>,
    pub stages: Vec<DecompositionState>,
    pub lbs: retinex_core::LbsMap,
}

/// Decompose, optionally fine-tune against a synthesized guide, adjust and recompose.
pub fn enhance_image(low: &ColorImage, cfg: &RunConfig, alpha_override: Option<f64>) -> Result<Enhancement, CliError> {
    cfg.validate()?;
    let stages = decompose(low, &cfg.solver).in_phase(Phase::Decompose)?;
    let state = stages.last().expect("decompose returns at least two states");
    let guide = synthesize_guide(low, &cfg.guide).in_phase(Phase::Guide)?;
    let lbs = lbs_predict(low, &guide).in_phase(Phase::Guide)?;

    let mut params = cfg.adjustment_init;
    if let Some(a) = alpha_override {
        params.alpha = a;
    }
    params.validate().map_err(CliError::InvalidConfig)?;

    let mut trace = None;
    if cfg.finetune_enabled {
        let res = finetune(state, low, &guide, params, cfg.finetune_iters).in_phase(Phase::Finetune)?;
        params = res.params;
        trace = Some(res.loss_trace);
    }
    let enhanced = enhance_with(state, &lbs, &params).in_phase(Phase::Adjust)?;
    Ok(Enhancement {
        enhanced,
        params,
        finetune_loss_trace: trace,
        stages,
        lbs,
    })
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Output {
        path: path.to_owned(),
        detail: e.to_string(),
    })?;
    fs::write(path, text + "\n").map_err(|e| CliError::Output {
        path: path.to_owned(),
        detail: e.to_string(),
    })
}

/// The `enhance` command: reads `input`, writes results under `cfg.output_dir`.
pub fn cmd_enhance(input: &Path, cfg: &RunConfig, alpha_override: Option<f64>) -> Result<EnhanceOutputs, CliError> {
    let low = load_image(input).in_phase(Phase::Load)?;
    let result = enhance_image(&low, cfg, alpha_override)?;

    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).map_err(|e| CliError::Output {
        path: dir.clone(),
        detail: e.to_string(),
    })?;
    let stem = input.file_stem().and_then(|s| s.to_str()).unwrap_or("image");
    let enhanced = dir.join(format!("{stem}_enhanced.png"));
    save_image(&result.enhanced, &enhanced).in_phase(Phase::Save)?;

    let state = result.stages.last().expect("non-empty");
    let summary = dir.join(format!("{stem}_summary.json"));
    write_json(
        &summary,
        &Summary {
            input: &input.to_string_lossy(),
            params: result.params,
            finetuned: result.finetune_loss_trace.is_some(),
            finetune_loss_trace: result.finetune_loss_trace.as_deref(),
            final_objective: state.objective,
            mean_luma_in: to_gray(&low).mean(),
            mean_luma_out: to_gray(&result.enhanced).mean(),
        },
    )?;

    let stage_trace = if cfg.emit_stage_trace {
        let path = dir.join(format!("{stem}_stages.json"));
        let rows: Vec<StageRow> = result
            .stages
            .iter()
            .map(|s| StageRow {
                stage: s.stage,
                objective: s.objective,
                l_halvings: s.l_step.halvings,
                r_halvings: s.r_step.halvings,
                exhausted: s.l_step.exhausted || s.r_step.exhausted,
            })
            .collect();
        write_json(&path, &rows)?;
        Some(path)
    } else {
        None
    };

    let layers = if cfg.save_layers {
        let paths = ["reflectance", "illumination", "lbs"].map(|n| dir.join(format!("{stem}_{n}.png")));
        save_image(&state.reflectance.clamp(0.0, 1.0), &paths[0]).in_phase(Phase::Save)?;
        save_plane(&state.illumination, &paths[1]).in_phase(Phase::Save)?;
        save_plane(result.lbs.plane(), &paths[2]).in_phase(Phase::Save)?;
        Some(paths)
    } else {
        None
    };

    Ok(EnhanceOutputs {
        enhanced,
        summary,
        stage_trace,
        layers,
    })
}
