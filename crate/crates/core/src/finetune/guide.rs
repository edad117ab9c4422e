//! Pseudo normal-light guide: global brightening, CLAHE, then denoising.

use serde::{Deserialize, Serialize};

use super::clahe::clahe;
use crate::error::{Error, Result};
use crate::plane::{guarded_div, to_gray, ColorImage, ImagePlane, DEFAULT_EPS_DIV};

const GUIDED_EPS: f64 = 1e-3;
const GUIDED_PASSES: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GuideConfig {
    pub target_mean_luma: f64,
    pub clahe_tiles: usize,
    pub clahe_clip: f64,
    /// Box radius of the denoiser; 0 disables it.
    pub denoise_radius: usize,
}

impl Default for GuideConfig {
    fn default() -> Self {
        Self {
            target_mean_luma: 0.5,
            clahe_tiles: 8,
            clahe_clip: 2.0,
            denoise_radius: 2,
        }
    }
}

impl GuideConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.target_mean_luma > 0.0 && self.target_mean_luma < 1.0) {
            return Err(Error::param(
                "target_mean_luma",
                format!("must lie in (0, 1), got {}", self.target_mean_luma),
            ));
        }
        if self.clahe_tiles == 0 {
            return Err(Error::param("clahe_tiles", "must be >= 1"));
        }
        if !(self.clahe_clip > 1.0 && self.clahe_clip.is_finite()) {
            return Err(Error::param("clahe_clip", format!("must be > 1, got {}", self.clahe_clip)));
        }
        Ok(())
    }
}

fn mean_luma_scaled(img: &ColorImage, s: f64) -> f64 {
    to_gray(&img.map(|v| (s * v).clamp(0.0, 1.0))).mean()
}

/// Scales all channels so the clipped image has the target mean luma.
///
/// Starts from `target / mean_luma`; when clipping eats into the mean, the
/// factor is raised by bisection until the clipped mean reaches the target
/// (or the best reachable value).
pub fn brighten(img: &ColorImage, target: f64) -> ColorImage {
    let mean = to_gray(img).mean();
    let s0 = target / mean.max(DEFAULT_EPS_DIV);
    let mut s = s0;
    if mean_luma_scaled(img, s0) < target {
        let (mut lo, mut hi) = (s0, s0);
        let mut reachable = false;
        for _ in 0..64 {
            hi *= 2.0;
            if mean_luma_scaled(img, hi) >= target {
                reachable = true;
                break;
            }
        }
        if reachable {
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if mean_luma_scaled(img, mid) < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
        }
        s = hi;
    }
    img.map(|v| (s * v).clamp(0.0, 1.0))
}

/// CLAHE on the luma, with every channel rescaled by the luma ratio.
pub fn equalize_local_contrast(img: &ColorImage, tiles: usize, clip_limit: f64) -> ColorImage {
    let luma = to_gray(img);
    let eq = clahe(&luma, tiles, clip_limit);
    let ratio = eq
        .zip_map(&luma, |e, y| if y > 0.0 { guarded_div(e, y, DEFAULT_EPS_DIV) } else { 0.0 })
        .expect("same dimensions");
    img.map_channels(|_, ch| {
        ch.zip_map(&ratio, |v, k| (v * k).clamp(0.0, 1.0))
            .expect("same dimensions")
    })
    .expect("same dimensions")
}

/// Mean over the in-bounds part of a `(2r+1)^2` window, via an integral image.
fn box_mean(plane: &ImagePlane, radius: usize) -> ImagePlane {
    let (h, w) = plane.dims();
    let mut integral = vec![0.0; (h + 1) * (w + 1)];
    for r in 0..h {
        let mut row = 0.0;
        for c in 0..w {
            row += plane.get(r, c);
            integral[(r + 1) * (w + 1) + c + 1] = integral[r * (w + 1) + c + 1] + row;
        }
    }
    ImagePlane::from_fn(h, w, |r, c| {
        let (r0, r1) = (r.saturating_sub(radius), (r + radius + 1).min(h));
        let (c0, c1) = (c.saturating_sub(radius), (c + radius + 1).min(w));
        let at = |y: usize, x: usize| integral[y * (w + 1) + x];
        let sum = at(r1, c1) - at(r0, c1) - at(r1, c0) + at(r0, c0);
        sum / ((r1 - r0) * (c1 - c0)) as f64
    })
}

/// Self-guided box filter: flattens low-variance regions, keeps edges.
fn guided_smooth(plane: &ImagePlane, radius: usize) -> ImagePlane {
    let mean = box_mean(plane, radius);
    let sq = box_mean(&plane.map(|v| v * v), radius);
    let var = sq.zip_map(&mean, |s, m| (s - m * m).max(0.0)).expect("same dimensions");
    let a = var.map(|v| v / (v + GUIDED_EPS));
    let b = mean.zip_map(&a, |m, a| m - a * m).expect("same dimensions");
    let (a, b) = (box_mean(&a, radius), box_mean(&b, radius));
    plane
        .zip_map(&a, |v, a| a * v)
        .and_then(|av| av.add(&b))
        .expect("same dimensions")
}

/// Edge-preserving smoothing by repeated self-guided box filtering.
pub fn denoise(img: &ColorImage, radius: usize) -> ColorImage {
    if radius == 0 {
        return img.clone();
    }
    img.map_channels(|_, ch| {
        let mut out = ch.clone();
        for _ in 0..GUIDED_PASSES {
            out = guided_smooth(&out, radius);
        }
        out.clamp(0.0, 1.0)
    })
    .expect("same dimensions")
}

/// Brighten, equalize local contrast, denoise. Output lies in `[0, 1]`.
pub fn synthesize_guide(low: &ColorImage, cfg: &GuideConfig) -> Result<ColorImage> {
    cfg.validate()?;
    let bright = brighten(low, cfg.target_mean_luma);
    let contrast = equalize_local_contrast(&bright, cfg.clahe_tiles, cfg.clahe_clip);
    Ok(denoise(&contrast, cfg.denoise_radius))
}
