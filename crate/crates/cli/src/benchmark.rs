use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use retinex_core::adjust::{auto_gamma, estimate_alpha, gamma_correct, lbs_predict, lbs_target};
use retinex_core::finetune::{enhance_with, finetune, synthesize_guide};
use retinex_core::metrics::{
    loe, loss_enhancement, loss_illumination_smooth, loss_lbs, loss_reconstruction,
    loss_reflectance_consistency, psnr, ssim,
};
use retinex_core::solver::decompose;
use retinex_core::{ColorImage, MetricsReport};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, InPhase, Phase};
use crate::io::load_image;
use crate::manifest::{DatasetManifest, ManifestEntry};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub id: String,
    pub paired: bool,
    pub metrics: Option<MetricsReport>,
    /// PSNR / SSIM after gamma-correcting the output to mean luma 0.5.
    pub psnr_gc: Option<f64>,
    pub ssim_gc: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub rows: Vec<ReportRow>,
    /// Per-field mean over the rows that report the field.
    pub mean: BTreeMap<String, f64>,
}

fn evaluate_paired(low: &ColorImage, high: &ColorImage, cfg: &RunConfig, row: &mut ReportRow) -> Result<(), CliError> {
    let st_low = decompose(low, &cfg.solver).in_phase(Phase::Decompose)?.pop().expect("non-empty");
    let st_high = decompose(high, &cfg.solver).in_phase(Phase::Decompose)?.pop().expect("non-empty");
    let alpha = estimate_alpha(low, high).in_phase(Phase::Adjust)?;
    let target = lbs_target(low, high).in_phase(Phase::Adjust)?;
    let params = retinex_core::AdjustmentParams {
        alpha,
        ..cfg.adjustment_init
    };
    let en = enhance_with(&st_low, &target, &params).in_phase(Phase::Adjust)?;
    let guide = synthesize_guide(low, &cfg.guide).in_phase(Phase::Guide)?;
    let predicted = lbs_predict(low, &guide).in_phase(Phase::Guide)?;

    let m = |r: retinex_core::Result<f64>| r.in_phase(Phase::Metrics);
    let w = &cfg.weights;
    let l_r = m(loss_reflectance_consistency(&st_low.reflectance, &st_high.reflectance))?;
    let l_l = m(loss_illumination_smooth(&st_low.illumination, &st_high.illumination, low, w))?;
    let l_rec = m(loss_reconstruction(&st_low.reflectance, &st_low.illumination, low))?
        + m(loss_reconstruction(&st_high.reflectance, &st_high.illumination, high))?;
    let mut losses = BTreeMap::new();
    losses.insert("l_r".into(), l_r);
    losses.insert("l_l".into(), l_l);
    losses.insert("l_rec".into(), l_rec);
    losses.insert("l_decomposition".into(), w.gamma_r * l_r + w.gamma_l * l_l + w.gamma_rec * l_rec);
    losses.insert("l_en".into(), m(loss_enhancement(&en, high))?);
    losses.insert("l_lbs".into(), m(loss_lbs(&predicted, &target))?);
    losses.insert("alpha".into(), alpha);

    row.metrics = Some(MetricsReport {
        psnr: Some(m(psnr(&en, high))?),
        ssim: Some(m(ssim(&en, high))?),
        loe: m(loe(&en, low))?,
        loe_ref: Some(m(loe(&en, high))?),
        finetune_loss_trace: None,
        losses,
    });
    if cfg.apply_gc {
        let gc = gamma_correct(&en, auto_gamma(&en)).in_phase(Phase::Adjust)?;
        row.psnr_gc = Some(m(psnr(&gc, high))?);
        row.ssim_gc = Some(m(ssim(&gc, high))?);
    }
    Ok(())
}

fn evaluate_unpaired(low: &ColorImage, cfg: &RunConfig, row: &mut ReportRow) -> Result<(), CliError> {
    let state = decompose(low, &cfg.solver).in_phase(Phase::Decompose)?.pop().expect("non-empty");
    let guide = synthesize_guide(low, &cfg.guide).in_phase(Phase::Guide)?;
    let lbs = lbs_predict(low, &guide).in_phase(Phase::Guide)?;
    let res = finetune(&state, low, &guide, cfg.adjustment_init, cfg.finetune_iters).in_phase(Phase::Finetune)?;
    let en = enhance_with(&state, &lbs, &res.params).in_phase(Phase::Adjust)?;
    row.metrics = Some(MetricsReport {
        loe: loe(&en, low).in_phase(Phase::Metrics)?,
        finetune_loss_trace: Some(res.loss_trace),
        ..MetricsReport::default()
    });
    Ok(())
}

fn evaluate(entry: &ManifestEntry, cfg: &RunConfig) -> ReportRow {
    let mut row = ReportRow {
        id: entry.id.clone(),
        paired: entry.high_path.is_some(),
        metrics: None,
        psnr_gc: None,
        ssim_gc: None,
        error: None,
    };
    let outcome = (|| {
        let low = load_image(&entry.low_path).in_phase(Phase::Load)?;
        match &entry.high_path {
            Some(p) => {
                let high = load_image(p).in_phase(Phase::Load)?;
                evaluate_paired(&low, &high, cfg, &mut row)
            }
            None => evaluate_unpaired(&low, cfg, &mut row),
        }
    })();
    if let Err(e) = outcome {
        row.metrics = None;
        row.psnr_gc = None;
        row.ssim_gc = None;
        row.error = Some(e.to_string());
    }
    row
}

fn row_fields(row: &ReportRow) -> Vec<(String, f64)> {
    let mut out = Vec::new();
    if let Some(m) = &row.metrics {
        out.push(("loe".to_string(), m.loe));
        for (k, v) in [("psnr", m.psnr), ("ssim", m.ssim), ("loe_ref", m.loe_ref)] {
            if let Some(v) = v {
                out.push((k.to_string(), v));
            }
        }
        out.extend(m.losses.iter().map(|(k, v)| (k.clone(), *v)));
    }
    for (k, v) in [("psnr_gc", row.psnr_gc), ("ssim_gc", row.ssim_gc)] {
        if let Some(v) = v {
            out.push((k.to_string(), v));
        }
    }
    out
}

fn mean_row(rows: &[ReportRow]) -> BTreeMap<String, f64> {
    let mut sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for row in rows {
        for (k, v) in row_fields(row) {
            let e = sums.entry(k).or_default();
            e.0 += v;
            e.1 += 1;
        }
    }
    sums.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect()
}

/// Evaluates every entry (in parallel, order preserved). Per-entry failures
/// land in the row's `error` field.
pub fn run_benchmark(manifest: &DatasetManifest, cfg: &RunConfig) -> Result<BenchmarkReport, CliError> {
    if manifest.entries.is_empty() {
        return Err(CliError::EmptyManifest);
    }
    cfg.validate()?;
    let rows: Vec<ReportRow> = manifest.entries.par_iter().map(|e| evaluate(e, cfg)).collect();
    let mean = mean_row(&rows);
    Ok(BenchmarkReport { rows, mean })
}

/// The `benchmark` command: evaluates the manifest and writes the JSON report to `out`.
pub fn cmd_benchmark(manifest_path: &Path, cfg: &RunConfig, out: &Path) -> Result<BenchmarkReport, CliError> {
    let manifest = DatasetManifest::load(manifest_path)?;
    let report = run_benchmark(&manifest, cfg)?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| CliError::Output {
            path: parent.to_owned(),
            detail: e.to_string(),
        })?;
    }
    let text = serde_json::to_string_pretty(&report).map_err(|e| CliError::Output {
        path: out.to_owned(),
        detail: e.to_string(),
    })?;
    std::fs::write(out, text + "\n").map_err(|e| CliError::Output {
        path: out.to_owned(),
        detail: e.to_string(),
    })?;
    Ok(report)
}
