//! Test-time fine-tuning of the adjustment parameters against a
//! self-synthesized guide image.
//!
//! The decomposition stays frozen. Each iteration runs three coordinate
//! steps (global brightness by golden-section search, per-channel gains in
//! closed form, LBS gain by bounded golden-section search) and keeps a step
//! only when it lowers the loss, so the trace never increases.

mod clahe;
mod guide;

pub use clahe::clahe;
pub use guide::{brighten, denoise, equalize_local_contrast, synthesize_guide, GuideConfig};

use serde::{Deserialize, Serialize};

use crate::adjust::{
    adjust_illumination, adjust_reflectance, lbs_predict, recompose, AdjustmentParams, LbsMap,
    GAIN_MAX, GAIN_MIN,
};
use crate::error::{Error, Result};
use crate::metrics::plane_mse;
use crate::plane::{ColorImage, ImagePlane, DEFAULT_EPS_DIV};
use crate::solver::DecompositionState;

/// Iteration count used when none is configured.
pub const DEFAULT_ITERATIONS: usize = 30;

/// Upper end of the LBS gain search interval.
pub const REFL_GAIN_MAX: f64 = 4.0;

const GOLDEN_EVALS: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinetuneResult {
    pub params: AdjustmentParams,
    /// Loss before the first iteration followed by the loss after each one.
    pub loss_trace: Vec<f64>,
    pub iterations: usize,
}

impl FinetuneResult {
    pub fn final_loss(&self) -> f64 {
        *self.loss_trace.last().expect("trace is never empty")
    }
}

/// `(1/HW) ||en - guide||_F^2` summed over channels.
pub fn finetune_loss(enhanced: &ColorImage, guide: &ColorImage) -> Result<f64> {
    enhanced.check_same(guide)?;
    let mut total = 0.0;
    for c in 0..3 {
        total += plane_mse(enhanced.channel(c), guide.channel(c))?;
    }
    Ok(total)
}

/// Enhanced image for a frozen decomposition and one parameter set.
pub fn enhance_with(
    state: &DecompositionState,
    lbs: &LbsMap,
    params: &AdjustmentParams,
) -> Result<ColorImage> {
    let r_adj = adjust_reflectance(&state.reflectance, lbs, params)?;
    let l_adj = adjust_illumination(&state.illumination, params);
    recompose(&r_adj, &l_adj)
}

/// Golden-section minimization of `f` over `[lo, hi]`; returns the best
/// point evaluated.
fn golden_section(lo: f64, hi: f64, mut f: impl FnMut(f64) -> Result<f64>) -> Result<(f64, f64)> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    let mut best = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    for _ in 0..GOLDEN_EVALS {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1)?;
            if f1 < best.1 {
                best = (x1, f1);
            }
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2)?;
            if f2 < best.1 {
                best = (x2, f2);
            }
        }
    }
    // the interval ends are cheap to check and often optimal for bounded params
    for x in [lo, hi] {
        let v = f(x)?;
        if v < best.1 {
            best = (x, v);
        }
    }
    Ok(best)
}

struct Objective<'a> {
    state: &'a DecompositionState,
    lbs: LbsMap,
    guide: &'a ColorImage,
    iteration: usize,
}

impl Objective<'_> {
    fn loss(&self, params: &AdjustmentParams) -> Result<f64> {
        let en = enhance_with(self.state, &self.lbs, params)?;
        let v = finetune_loss(&en, self.guide)?;
        if !v.is_finite() {
            return Err(Error::NonFiniteLoss {
                iteration: self.iteration,
            });
        }
        Ok(v)
    }

    fn loss_at_alpha(&self, l_base: &ImagePlane, r_adj: &ColorImage, params: &AdjustmentParams, alpha: f64) -> Result<f64> {
        let p = AdjustmentParams { alpha, ..*params };
        let en = recompose(r_adj, &adjust_illumination(l_base, &p))?;
        let v = finetune_loss(&en, self.guide)?;
        if !v.is_finite() {
            return Err(Error::NonFiniteLoss {
                iteration: self.iteration,
            });
        }
        Ok(v)
    }
}

/// Optimizes `init` for `iters` coordinate-descent iterations against `guide`.
///
/// `state` is the final decomposition of `low` and is only read.
pub fn finetune(
    state: &DecompositionState,
    low: &ColorImage,
    guide: &ColorImage,
    init: AdjustmentParams,
    iters: usize,
) -> Result<FinetuneResult> {
    if iters == 0 {
        return Err(Error::param("iters", "must be >= 1"));
    }
    low.check_same(guide)?;
    low.check_same(&state.reflectance)?;

    let mut obj = Objective {
        state,
        lbs: lbs_predict(low, guide)?,
        guide,
        iteration: 0,
    };
    let mut params = init.clamped();
    let mut current = obj.loss(&params)?;
    let mut trace = Vec::with_capacity(iters + 1);
    trace.push(current);

    for iteration in 1..=iters {
        obj.iteration = iteration;

        // (a) global brightness
        let r_adj = adjust_reflectance(&state.reflectance, &obj.lbs, &params)?;
        let (alpha, value) = golden_section(0.0, 1.0, |a| {
            obj.loss_at_alpha(&state.illumination, &r_adj, &params, a)
        })?;
        if value < current {
            params.alpha = alpha;
            current = value;
        }

        // (b) per-channel gains from the channel-mean ratio
        let en = enhance_with(state, &obj.lbs, &params)?;
        let mut gains = params.per_channel_gain;
        for (c, g) in gains.iter_mut().enumerate() {
            let ratio = guide.channel(c).mean() / en.channel(c).mean().max(DEFAULT_EPS_DIV);
            *g = (*g * ratio).clamp(GAIN_MIN, GAIN_MAX);
        }
        let candidate = AdjustmentParams {
            per_channel_gain: gains,
            ..params
        };
        let value = obj.loss(&candidate)?;
        if value < current {
            params = candidate;
            current = value;
        }

        // (c) LBS gain
        let (refl_gain, value) = golden_section(0.0, REFL_GAIN_MAX, |b| {
            obj.loss(&AdjustmentParams {
                refl_gain: b,
                ..params
            })
        })?;
        if value < current {
            params.refl_gain = refl_gain;
            current = value;
        }

        trace.push(current);
    }

    Ok(FinetuneResult {
        params,
        loss_trace: trace,
        iterations: iters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adjust::estimate_alpha;
    use crate::solver::{decompose, SolverConfig};
    use crate::synthetic::dark_pair;

    fn flat_state(l: f64, r: [f64; 3], h: usize, w: usize) -> DecompositionState {
        let cfg = SolverConfig { stages: 1, ..Default::default() };
        let img = ColorImage::filled(h, w, r.map(|v| v * l));
        let mut st = decompose(&img, &cfg).unwrap().pop().unwrap();
        st.illumination = ImagePlane::filled(h, w, l);
        st.reflectance = ColorImage::filled(h, w, r);
        st
    }

    #[test]
    fn loss_examples() {
        let a = ColorImage::filled(4, 5, [0.3, 0.5, 0.7]);
        assert_eq!(finetune_loss(&a, &a).unwrap(), 0.0);
        let b = a.map(|v| v + 0.2);
        assert!((finetune_loss(&a, &b).unwrap() - 3.0 * 0.04).abs() < 1e-12);
        assert!(finetune_loss(&a, &ColorImage::filled(4, 4, [0.0; 3])).is_err());
    }

    #[test]
    fn golden_section_finds_parabola_minimum() {
        let (x, v) = golden_section(0.0, 1.0, |x| Ok((x - 0.3).powi(2))).unwrap();
        assert!((x - 0.3).abs() < 1e-5 && v < 1e-10);
        let (x, _) = golden_section(0.0, 4.0, Ok).unwrap();
        assert_eq!(x, 0.0);
    }

    #[test]
    fn already_optimal_init_stays_put() {
        let (low, _) = dark_pair(16, 16, 0.3, 0.0, 1);
        let state = decompose(&low, &SolverConfig { stages: 3, ..Default::default() }).unwrap().pop().unwrap();
        // with no LBS boost the guide-derived LBS map has no effect
        let init = AdjustmentParams { refl_gain: 0.0, ..AdjustmentParams::default() };
        let guide = enhance_with(&state, &LbsMap::zeros(16, 16), &init).unwrap();
        let res = finetune(&state, &low, &guide, init, 5).unwrap();
        assert!(res.loss_trace.iter().all(|&v| v == 0.0));
        assert_eq!(res.params, init.clamped());
    }

    #[test]
    fn alpha_matches_oracle_on_known_factorization() {
        // pick illumination levels where the power map and the ratio oracle
        // agree: low^(low / lit) = lit
        let lit: f64 = 0.8;
        let (mut a, mut b) = (1e-3, lit);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if (m / lit) * m.ln() < lit.ln() { a = m } else { b = m }
        }
        let c = 0.5 * (a + b);
        let (h, w) = (12, 12);
        let r = [0.9, 0.8, 1.0];
        let state = flat_state(c, r, h, w);
        let low = ColorImage::filled(h, w, r.map(|v| v * c));
        let guide = ColorImage::filled(h, w, r.map(|v| v * lit));
        let init = AdjustmentParams { refl_gain: 0.0, ..AdjustmentParams::default() };
        let res = finetune(&state, &low, &guide, init, 30).unwrap();
        let oracle = estimate_alpha(&low, &guide).unwrap();
        assert!((res.params.alpha - oracle).abs() < 0.05, "{} vs {oracle}", res.params.alpha);
        assert!(res.final_loss() < 1e-6);
    }

    #[test]
    fn trace_monotone_and_longer_runs_do_no_worse() {
        let (low, _) = dark_pair(32, 32, 0.2, 0.01, 4);
        let state = decompose(&low, &SolverConfig { stages: 5, ..Default::default() }).unwrap().pop().unwrap();
        let before = state.clone();
        let guide = synthesize_guide(&low, &GuideConfig::default()).unwrap();
        let long = finetune(&state, &low, &guide, AdjustmentParams::default(), 30).unwrap();
        let short = finetune(&state, &low, &guide, AdjustmentParams::default(), 1).unwrap();
        assert_eq!(long.loss_trace.len(), 31);
        assert_eq!(long.iterations, 30);
        assert!(long.loss_trace.windows(2).all(|p| p[1] <= p[0]));
        assert!(long.final_loss() <= short.final_loss());
        assert!(long.final_loss() < long.loss_trace[0]);
        assert!(long.params.validate().is_ok());
        assert_eq!(state, before);
    }

    #[test]
    fn zero_iterations_and_mismatched_guide_fail() {
        let (low, _) = dark_pair(16, 16, 0.3, 0.0, 2);
        let state = decompose(&low, &SolverConfig { stages: 1, ..Default::default() }).unwrap().pop().unwrap();
        assert!(finetune(&state, &low, &low, AdjustmentParams::default(), 0).is_err());
        let small = ColorImage::filled(8, 8, [0.5; 3]);
        assert!(finetune(&state, &low, &small, AdjustmentParams::default(), 1).is_err());
    }
}
