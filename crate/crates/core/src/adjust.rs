//! Brightness adjustment of a decomposition and recomposition.
//!
//! The illumination is brightened by a power map whose exponent is driven by
//! the global brightness `alpha`; the reflectance is boosted by a gain field
//! proportional to the local brightness sensitivity (LBS) map, then scaled
//! per channel.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plane::{guarded_div, to_gray, ColorImage, ImagePlane, DEFAULT_EPS_DIV};

pub const GAIN_MIN: f64 = 0.25;
pub const GAIN_MAX: f64 = 4.0;

/// Largest value an LBS map may hold.
pub const LBS_MAX: f64 = 1.0 - 1e-6;

const GC_LOW: f64 = 0.2;
const GC_HIGH: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdjustmentParams {
    /// Global brightness in `[0, 1]`; 0 leaves the illumination untouched.
    pub alpha: f64,
    /// Lower bound of the illumination exponent `1 - alpha`.
    pub illum_gamma_floor: f64,
    /// Strength of the LBS-driven reflectance boost.
    pub refl_gain: f64,
    pub per_channel_gain: [f64; 3],
}

impl Default for AdjustmentParams {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            illum_gamma_floor: 0.1,
            refl_gain: 0.25,
            per_channel_gain: [1.0; 3],
        }
    }
}

impl AdjustmentParams {
    /// Parameters that leave a decomposition unchanged.
    pub fn identity() -> Self {
        Self {
            alpha: 0.0,
            refl_gain: 0.0,
            per_channel_gain: [1.0; 3],
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::param("alpha", format!("must lie in [0, 1], got {}", self.alpha)));
        }
        if !(self.illum_gamma_floor > 0.0 && self.illum_gamma_floor <= 1.0) {
            return Err(Error::param(
                "illum_gamma_floor",
                format!("must lie in (0, 1], got {}", self.illum_gamma_floor),
            ));
        }
        if !(self.refl_gain >= 0.0 && self.refl_gain.is_finite()) {
            return Err(Error::param("refl_gain", format!("must be >= 0, got {}", self.refl_gain)));
        }
        if let Some(g) = self
            .per_channel_gain
            .iter()
            .find(|g| !(GAIN_MIN..=GAIN_MAX).contains(*g))
        {
            return Err(Error::param(
                "per_channel_gain",
                format!("each gain must lie in [{GAIN_MIN}, {GAIN_MAX}], got {g}"),
            ));
        }
        Ok(())
    }

    /// Exponent applied to the illumination.
    pub fn illumination_exponent(&self) -> f64 {
        (1.0 - self.alpha).max(self.illum_gamma_floor)
    }

    /// Clamps every field into its valid range.
    pub fn clamped(mut self) -> Self {
        self.alpha = self.alpha.clamp(0.0, 1.0);
        self.illum_gamma_floor = self.illum_gamma_floor.clamp(f64::MIN_POSITIVE, 1.0);
        self.refl_gain = self.refl_gain.max(0.0);
        for g in &mut self.per_channel_gain {
            *g = g.clamp(GAIN_MIN, GAIN_MAX);
        }
        self
    }
}

/// Per-pixel relative brightness deficit, values in `[0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LbsMap {
    plane: ImagePlane,
}

impl LbsMap {
    pub fn new(plane: ImagePlane) -> Result<Self> {
        if plane.min() < 0.0 || plane.max() >= 1.0 {
            return Err(Error::param("lbs", "values must lie in [0, 1)"));
        }
        Ok(Self { plane })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self {
            plane: ImagePlane::zeros(height, width),
        }
    }

    pub fn plane(&self) -> &ImagePlane {
        &self.plane
    }

    pub fn into_plane(self) -> ImagePlane {
        self.plane
    }
}

fn relative_deficit(low: &ColorImage, high: &ColorImage) -> Result<ImagePlane> {
    low.check_same(high)?;
    let gl = to_gray(low);
    let gh = to_gray(high);
    gh.zip_map(&gl, |h, l| guarded_div(h - l, h, DEFAULT_EPS_DIV))
}

/// Mean relative luma deficit of `low` with respect to `high`, in `[0, 1]`.
pub fn estimate_alpha(low: &ColorImage, high: &ColorImage) -> Result<f64> {
    let deficit = relative_deficit(low, high)?;
    let mean_abs = deficit.as_slice().iter().map(|v| v.abs()).sum::<f64>() / deficit.len() as f64;
    Ok(mean_abs.clamp(0.0, 1.0))
}

/// `(gray(high) - gray(low)) / gray(high)`, clamped to `[0, 1 - 1e-6]`.
pub fn lbs_target(low: &ColorImage, high: &ColorImage) -> Result<LbsMap> {
    let deficit = relative_deficit(low, high)?;
    Ok(LbsMap {
        plane: deficit.clamp(0.0, LBS_MAX),
    })
}

/// LBS estimate against any brightness reference: the synthesized guide at
/// test time, or the groundtruth when one is available.
pub fn lbs_predict(low: &ColorImage, guide: &ColorImage) -> Result<LbsMap> {
    lbs_target(low, guide)
}

/// `max(L, 0) ^ max(1 - alpha, floor)`.
pub fn adjust_illumination(illumination: &ImagePlane, params: &AdjustmentParams) -> ImagePlane {
    let e = params.illumination_exponent();
    illumination.map(|v| v.max(0.0).powf(e))
}

/// `clip(gain_c * R_c * (1 + refl_gain * lbs), 0, 1)`.
pub fn adjust_reflectance(
    reflectance: &ColorImage,
    lbs: &LbsMap,
    params: &AdjustmentParams,
) -> Result<ColorImage> {
    reflectance.check_plane(&lbs.plane)?;
    let boost = lbs.plane.map(|v| 1.0 + params.refl_gain * v);
    reflectance.try_map_channels(|c, ch| {
        let g = params.per_channel_gain[c];
        ch.zip_map(&boost, |r, b| (g * r * b).clamp(0.0, 1.0))
    })
}

/// `clip(R * L, 0, 1)` per channel.
pub fn recompose(reflectance: &ColorImage, illumination: &ImagePlane) -> Result<ColorImage> {
    reflectance.try_map_channels(|_, ch| ch.zip_map(illumination, |r, l| (r * l).clamp(0.0, 1.0)))
}

/// `v -> clip(v, 0, 1) ^ (1 / g)`.
pub fn gamma_correct(img: &ColorImage, g: f64) -> Result<ColorImage> {
    if !(g > 0.0 && g.is_finite()) {
        return Err(Error::param("gamma", format!("must be > 0, got {g}")));
    }
    let inv = 1.0 / g;
    Ok(img.map(|v| v.clamp(0.0, 1.0).powf(inv)))
}

/// Exponent in `[0.2, 5]` whose correction brings the mean luma closest to
/// 0.5, found by bisection.
pub fn auto_gamma(img: &ColorImage) -> f64 {
    let mean_after = |g: f64| to_gray(&gamma_correct(img, g).expect("g within bracket")).mean();
    // mean_after is non-decreasing in g
    if mean_after(GC_LOW) >= 0.5 {
        return GC_LOW;
    }
    if mean_after(GC_HIGH) <= 0.5 {
        return GC_HIGH;
    }
    let (mut lo, mut hi) = (GC_LOW, GC_HIGH);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if mean_after(mid) < 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
