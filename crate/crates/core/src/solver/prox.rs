//! Explicit proximal operators applied after each descent step.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plane::{to_gray, ColorImage, ImagePlane};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProxChoice {
    /// Projection onto the non-negative orthant only.
    #[default]
    Identity,
    /// Separable Gaussian blur with standard deviation `width` (pixels).
    GaussianSmooth { width: f64 },
    /// One Jacobi sweep of edge-weighted diffusion.
    WeightedSmooth { strength: f64 },
}

impl ProxChoice {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ProxChoice::Identity => Ok(()),
            ProxChoice::GaussianSmooth { width } if !(width > 0.0 && width.is_finite()) => {
                Err(Error::param("prox.width", format!("must be positive, got {width}")))
            }
            ProxChoice::WeightedSmooth { strength } if !(strength > 0.0 && strength.is_finite()) => {
                Err(Error::param("prox.strength", format!("must be positive, got {strength}")))
            }
            _ => Ok(()),
        }
    }
}

/// Diffusion weights between 4-neighbors, frozen from an input image.
///
/// `horizontal[r * w + c]` couples `(r, c)` and `(r, c + 1)`,
/// `vertical[r * w + c]` couples `(r, c)` and `(r + 1, c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeWeights {
    height: usize,
    width: usize,
    horizontal: Vec<f64>,
    vertical: Vec<f64>,
}

impl EdgeWeights {
    /// Weights `exp(-|g(p) - g(q)| / sigma)` on the luma of `img`.
    pub fn from_image(img: &ColorImage, sigma: f64) -> Self {
        Self::from_plane(&to_gray(img), sigma)
    }

    pub fn from_plane(guide: &ImagePlane, sigma: f64) -> Self {
        let (h, w) = guide.dims();
        let weight = |a: f64, b: f64| (-(a - b).abs() / sigma).exp();
        let mut horizontal = vec![0.0; h * w];
        let mut vertical = vec![0.0; h * w];
        for r in 0..h {
            for c in 0..w {
                if c + 1 < w {
                    horizontal[r * w + c] = weight(guide.get(r, c), guide.get(r, c + 1));
                }
                if r + 1 < h {
                    vertical[r * w + c] = weight(guide.get(r, c), guide.get(r + 1, c));
                }
            }
        }
        Self {
            height: h,
            width: w,
            horizontal,
            vertical,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }
}

/// Applies `choice` to a plane and projects onto `>= 0`.
///
/// `weights` is only consulted by [`ProxChoice::WeightedSmooth`].
pub fn apply_prox(plane: &ImagePlane, choice: ProxChoice, weights: &EdgeWeights) -> Result<ImagePlane> {
    let out = match choice {
        ProxChoice::Identity => plane.clone(),
        ProxChoice::GaussianSmooth { width } => gaussian_blur(plane, width),
        ProxChoice::WeightedSmooth { strength } => {
            if weights.dims() != plane.dims() {
                return Err(Error::DimensionMismatch {
                    expected: plane.dims(),
                    found: weights.dims(),
                });
            }
            jacobi_diffusion_step(plane, strength, weights)
        }
    };
    Ok(out.clamp_nonneg())
}

pub fn apply_prox_color(
    img: &ColorImage,
    choice: ProxChoice,
    weights: &EdgeWeights,
) -> Result<ColorImage> {
    img.try_map_channels(|_, ch| apply_prox(ch, choice, weights))
}

pub(crate) fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil().max(1.0) as usize;
    let mut k: Vec<f64> = (0..=2 * radius)
        .map(|i| {
            let x = i as f64 - radius as f64;
            (-x * x / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Separable Gaussian blur with edge-clamped borders.
pub fn gaussian_blur(plane: &ImagePlane, sigma: f64) -> ImagePlane {
    let k = gaussian_kernel(sigma);
    let radius = (k.len() / 2) as isize;
    let (h, w) = plane.dims();
    let clamp = |i: isize, n: usize| i.clamp(0, n as isize - 1) as usize;

    let tmp = ImagePlane::from_fn(h, w, |r, c| {
        k.iter()
            .enumerate()
            .map(|(j, kv)| kv * plane.get(r, clamp(c as isize + j as isize - radius, w)))
            .sum()
    });
    ImagePlane::from_fn(h, w, |r, c| {
        k.iter()
            .enumerate()
            .map(|(j, kv)| kv * tmp.get(clamp(r as isize + j as isize - radius, h), c))
            .sum()
    })
}

/// One Jacobi sweep for `(Id + s * Lap_w) x = y`, started from `x = y`:
/// `x_p = (y_p + s * sum_q w_pq y_q) / (1 + s * sum_q w_pq)`.
fn jacobi_diffusion_step(plane: &ImagePlane, strength: f64, weights: &EdgeWeights) -> ImagePlane {
    let (h, w) = plane.dims();
    ImagePlane::from_fn(h, w, |r, c| {
        let p = r * w + c;
        let mut num = plane.get(r, c);
        let mut den = 1.0;
        let mut couple = |wt: f64, v: f64| {
            num += strength * wt * v;
            den += strength * wt;
        };
        if c > 0 {
            couple(weights.horizontal[p - 1], plane.get(r, c - 1));
        }
        if c + 1 < w {
            couple(weights.horizontal[p], plane.get(r, c + 1));
        }
        if r > 0 {
            couple(weights.vertical[p - w], plane.get(r - 1, c));
        }
        if r + 1 < h {
            couple(weights.vertical[p], plane.get(r + 1, c));
        }
        num / den
    })
}
