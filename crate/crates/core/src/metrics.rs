//! Decomposition and enhancement losses, and full-reference quality metrics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::adjust::LbsMap;
use crate::error::{Error, Result};
use crate::plane::{diff_conv, Axis, ColorImage, DifferenceKernel, ImagePlane};

/// Reported instead of `+inf` for identical images.
pub const PSNR_CAP: f64 = 99.0;

/// Side of the SSIM Gaussian window.
pub const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;

/// Lightness maps are downsampled to at most this many rows and columns
/// before pairwise order comparison.
pub const LOE_MAX_SIDE: usize = 50;
const LOE_SCALE: f64 = 1000.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossWeights {
    pub gamma_r: f64,
    pub gamma_l: f64,
    pub gamma_rec: f64,
    pub eta_l: f64,
    pub eta_r: f64,
    pub eta_lbs: f64,
    pub eta_en: f64,
    /// Floor on the input gradient magnitude in the illumination smoothness loss.
    pub eps_grad: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            gamma_r: 0.1,
            gamma_l: 1.0,
            gamma_rec: 1000.0,
            eta_l: 0.05,
            eta_r: 0.05,
            eta_lbs: 0.1,
            eta_en: 20.0,
            eps_grad: 0.01,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [
            ("gamma_r", self.gamma_r),
            ("gamma_l", self.gamma_l),
            ("gamma_rec", self.gamma_rec),
            ("eta_l", self.eta_l),
            ("eta_r", self.eta_r),
            ("eta_lbs", self.eta_lbs),
            ("eta_en", self.eta_en),
        ];
        for (name, v) in all {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("must be >= 0, got {v}")));
            }
        }
        if !(self.eps_grad > 0.0 && self.eps_grad.is_finite()) {
            return Err(Error::param("eps_grad", format!("must be > 0, got {}", self.eps_grad)));
        }
        Ok(())
    }
}

/// Quality figures for one image. Serializes to a flat JSON object.
///
/// `psnr`, `ssim` and `loe_ref` need a groundtruth and are `null` without one.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricsReport {
    pub psnr: Option<f64>,
    pub ssim: Option<f64>,
    pub loe: f64,
    pub loe_ref: Option<f64>,
    pub finetune_loss_trace: Option<Vec<f64>>,
    #[serde(flatten)]
    pub losses: BTreeMap<String, f64>,
}

/// `(1/HW) ||a - b||_F^2` for a single plane.
pub fn plane_mse(a: &ImagePlane, b: &ImagePlane) -> Result<f64> {
    a.check_same(b)?;
    let sum: f64 = a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y).powi(2)).sum();
    Ok(sum / a.len() as f64)
}

/// Squared distance summed over channels, divided by the pixel count.
fn color_sq_dist(a: &ColorImage, b: &ColorImage) -> Result<f64> {
    a.check_same(b)?;
    let mut total = 0.0;
    for c in 0..3 {
        total += plane_mse(a.channel(c), b.channel(c))?;
    }
    Ok(total)
}

pub fn loss_reflectance_consistency(r_low: &ColorImage, r_high: &ColorImage) -> Result<f64> {
    color_sq_dist(r_low, r_high)
}

/// Per-axis channel-max magnitude of the input gradient.
fn input_gradient_magnitude(img: &ColorImage, axis: Axis) -> Result<ImagePlane> {
    let k = DifferenceKernel::new(axis);
    let mut mag: Option<ImagePlane> = None;
    for ch in img.channels() {
        let g = diff_conv(ch, k)?.map(f64::abs);
        mag = Some(match mag {
            None => g,
            Some(m) => m.zip_map(&g, f64::max)?,
        });
    }
    Ok(mag.expect("three channels"))
}

/// Illumination smoothness weighted by the inverse low-light gradient.
pub fn loss_illumination_smooth(
    l_low: &ImagePlane,
    l_high: &ImagePlane,
    i_low: &ColorImage,
    weights: &LossWeights,
) -> Result<f64> {
    l_low.check_same(l_high)?;
    i_low.check_plane(l_low)?;
    let mut total = 0.0;
    for axis in Axis::BOTH {
        let k = DifferenceKernel::new(axis);
        let denom = input_gradient_magnitude(i_low, axis)?.map(|m| m.max(weights.eps_grad));
        for l in [l_low, l_high] {
            let d = diff_conv(l, k)?;
            total += d
                .as_slice()
                .iter()
                .zip(denom.as_slice())
                .map(|(g, m)| g.abs() / m)
                .sum::<f64>();
        }
    }
    Ok(total / l_low.len() as f64)
}

/// `(1/HW) ||I - R*L||_F^2` over channels.
pub fn loss_reconstruction(
    reflectance: &ColorImage,
    illumination: &ImagePlane,
    img: &ColorImage,
) -> Result<f64> {
    color_sq_dist(&reflectance.mul_plane(illumination)?, img)
}

/// Mean per-pixel angle between RGB vectors; zero vectors contribute 0.
pub fn loss_color_angle(a: &ColorImage, b: &ColorImage) -> Result<f64> {
    a.check_same(b)?;
    let (h, w) = a.dims();
    let mut total = 0.0;
    for r in 0..h {
        for c in 0..w {
            total += rgb_angle(a.pixel(r, c), b.pixel(r, c));
        }
    }
    Ok(total / (h * w) as f64)
}

fn rgb_angle(p: [f64; 3], q: [f64; 3]) -> f64 {
    if p == [0.0; 3] || q == [0.0; 3] {
        return 0.0;
    }
    // atan2 of |p x q| and p.q stays accurate for nearly parallel vectors
    let dot = p[0] * q[0] + p[1] * q[1] + p[2] * q[2];
    let cross = [
        p[1] * q[2] - p[2] * q[1],
        p[2] * q[0] - p[0] * q[2],
        p[0] * q[1] - p[1] * q[0],
    ];
    let cross_norm = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
    cross_norm.atan2(dot)
}

/// MSE plus color-angle term against the groundtruth.
pub fn loss_enhancement(enhanced: &ColorImage, groundtruth: &ColorImage) -> Result<f64> {
    Ok(color_sq_dist(enhanced, groundtruth)? + loss_color_angle(enhanced, groundtruth)?)
}

pub fn loss_lbs(predicted: &LbsMap, target: &LbsMap) -> Result<f64> {
    plane_mse(predicted.plane(), target.plane())
}

/// Peak signal-to-noise ratio for unit dynamic range, capped at [`PSNR_CAP`].
pub fn psnr(a: &ColorImage, b: &ColorImage) -> Result<f64> {
    let mse = color_sq_dist(a, b)? / 3.0;
    if mse == 0.0 {
        return Ok(PSNR_CAP);
    }
    Ok((10.0 * (1.0 / mse).log10()).min(PSNR_CAP))
}

fn ssim_kernel() -> [f64; SSIM_WINDOW] {
    let radius = (SSIM_WINDOW / 2) as f64;
    let mut k = [0.0; SSIM_WINDOW];
    for (i, v) in k.iter_mut().enumerate() {
        let x = i as f64 - radius;
        *v = (-x * x / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= s);
    k
}

/// Separable Gaussian filter without padding: output is `(h-10) x (w-10)`.
fn filter_valid(src: &[f64], h: usize, w: usize, k: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let ow = w - SSIM_WINDOW + 1;
    let oh = h - SSIM_WINDOW + 1;
    let mut tmp = vec![0.0; h * ow];
    for r in 0..h {
        let row = &src[r * w..(r + 1) * w];
        for c in 0..ow {
            tmp[r * ow + c] = k.iter().zip(&row[c..c + SSIM_WINDOW]).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for r in 0..oh {
        for c in 0..ow {
            out[r * ow + c] = k
                .iter()
                .enumerate()
                .map(|(j, kv)| kv * tmp[(r + j) * ow + c])
                .sum();
        }
    }
    out
}

/// Mean SSIM of one plane pair (11x11 Gaussian window, sigma 1.5, range 1).
pub fn ssim_plane(a: &ImagePlane, b: &ImagePlane) -> Result<f64> {
    a.check_same(b)?;
    let (h, w) = a.dims();
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(Error::ImageTooSmall {
            height: h,
            width: w,
            min: SSIM_WINDOW,
        });
    }
    let k = ssim_kernel();
    let (x, y) = (a.as_slice(), b.as_slice());
    let prod = |f: &dyn Fn(f64, f64) -> f64| -> Vec<f64> { x.iter().zip(y).map(|(&p, &q)| f(p, q)).collect() };
    let mu_x = filter_valid(x, h, w, &k);
    let mu_y = filter_valid(y, h, w, &k);
    let xx = filter_valid(&prod(&|p, _| p * p), h, w, &k);
    let yy = filter_valid(&prod(&|_, q| q * q), h, w, &k);
    let xy = filter_valid(&prod(&|p, q| p * q), h, w, &k);

    let c1 = SSIM_K1 * SSIM_K1;
    let c2 = SSIM_K2 * SSIM_K2;
    let n = mu_x.len();
    let total: f64 = (0..n)
        .map(|i| {
            let (mx, my) = (mu_x[i], mu_y[i]);
            let vx = xx[i] - mx * mx;
            let vy = yy[i] - my * my;
            let cxy = xy[i] - mx * my;
            ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2))
        })
        .sum();
    Ok(total / n as f64)
}

/// Channel-averaged mean SSIM.
pub fn ssim(a: &ColorImage, b: &ColorImage) -> Result<f64> {
    a.check_same(b)?;
    let mut total = 0.0;
    for c in 0..3 {
        total += ssim_plane(a.channel(c), b.channel(c))?;
    }
    Ok((total / 3.0).clamp(-1.0, 1.0))
}

fn downsample_nearest(plane: &ImagePlane, max_side: usize) -> ImagePlane {
    let (h, w) = plane.dims();
    let (dh, dw) = (h.min(max_side), w.min(max_side));
    ImagePlane::from_fn(dh, dw, |r, c| plane.get(r * h / dh, c * w / dw))
}

/// Lightness-order error of `enhanced` against `reference`, scaled by 1000.
///
/// Lightness is the per-pixel channel maximum. Both maps are downsampled to
/// at most 50x50 and every ordered pixel pair is compared; the result is the
/// fraction of pairs whose `>=` relation differs. Asymmetric: `reference`
/// supplies the order being checked against.
pub fn loe(enhanced: &ColorImage, reference: &ColorImage) -> Result<f64> {
    enhanced.check_same(reference)?;
    let le = downsample_nearest(&enhanced.max_channel(), LOE_MAX_SIDE);
    let lr = downsample_nearest(&reference.max_channel(), LOE_MAX_SIDE);
    let (e, r) = (le.as_slice(), lr.as_slice());
    let n = e.len();
    let mut mismatches: u64 = 0;
    for x in 0..n {
        for y in 0..n {
            if (e[x] >= e[y]) != (r[x] >= r[y]) {
                mismatches += 1;
            }
        }
    }
    Ok(LOE_SCALE * mismatches as f64 / (n * n) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_2;

    fn uniform(h: usize, w: usize, rgb: [f64; 3]) -> ColorImage {
        ColorImage::filled(h, w, rgb)
    }

    #[test]
    fn reflectance_consistency_examples() {
        let a = ColorImage::from_fn(3, 4, |r, c| [0.1 * r as f64, 0.05 * c as f64, 0.3]);
        let b = a.map(|v| 1.0 - v);
        assert_eq!(loss_reflectance_consistency(&a, &a).unwrap(), 0.0);
        assert_abs_diff_eq!(
            plane_mse(&ImagePlane::filled(1, 1, 0.2), &ImagePlane::filled(1, 1, 0.5)).unwrap(),
            0.09,
            epsilon = 1e-15
        );
        // three identical channels triple the single-channel value
        assert_abs_diff_eq!(
            loss_reflectance_consistency(&uniform(1, 1, [0.2; 3]), &uniform(1, 1, [0.5; 3])).unwrap(),
            0.27,
            epsilon = 1e-15
        );
        assert_eq!(
            loss_reflectance_consistency(&a, &b).unwrap(),
            loss_reflectance_consistency(&b, &a).unwrap()
        );
    }

    #[test]
    fn smoothness_examples() {
        let w = LossWeights::default();
        let img = ColorImage::from_fn(5, 5, |r, c| [0.1 * r as f64, 0.1 * c as f64, 0.2]);
        let flat_l = ImagePlane::filled(5, 5, 0.4);
        assert_eq!(loss_illumination_smooth(&flat_l, &flat_l, &img, &w).unwrap(), 0.0);

        let flat_i = uniform(4, 4, [0.3; 3]);
        let l_low = ImagePlane::from_fn(4, 4, |r, c| 0.1 * (r + 2 * c) as f64);
        let l_high = ImagePlane::from_fn(4, 4, |r, c| 0.05 * (r * c) as f64);
        let l1 = |p: &ImagePlane| -> f64 {
            Axis::BOTH
                .iter()
                .map(|&ax| diff_conv(p, DifferenceKernel::new(ax)).unwrap().as_slice().iter().map(|v| v.abs()).sum::<f64>())
                .sum()
        };
        let expected = (l1(&l_low) + l1(&l_high)) / (16.0 * w.eps_grad);
        assert_abs_diff_eq!(
            loss_illumination_smooth(&l_low, &l_high, &flat_i, &w).unwrap(),
            expected,
            epsilon = 1e-12
        );
    }

    #[test]
    fn reconstruction_examples() {
        let r = ColorImage::from_fn(3, 3, |r, c| [0.3, 0.1 * r as f64, 0.2 * c as f64]);
        let l = ImagePlane::from_fn(3, 3, |r, c| 0.5 + 0.1 * (r + c) as f64);
        let exact = r.mul_plane(&l).unwrap();
        assert_eq!(loss_reconstruction(&r, &l, &exact).unwrap(), 0.0);
        let one = ColorImage::from_channels([
            ImagePlane::filled(1, 1, 1.0),
            ImagePlane::filled(1, 1, 0.0),
            ImagePlane::filled(1, 1, 0.0),
        ])
        .unwrap();
        let half = ColorImage::from_channels([
            ImagePlane::filled(1, 1, 0.5),
            ImagePlane::filled(1, 1, 0.0),
            ImagePlane::filled(1, 1, 0.0),
        ])
        .unwrap();
        assert_abs_diff_eq!(
            loss_reconstruction(&half, &ImagePlane::filled(1, 1, 1.0), &one).unwrap(),
            0.25,
            epsilon = 1e-15
        );
    }

    #[test]
    fn psnr_examples() {
        let a = ColorImage::from_fn(6, 6, |r, c| [0.1 + 0.05 * r as f64, 0.3, 0.02 * c as f64]);
        let b = a.map(|v| v + 0.1);
        assert_abs_diff_eq!(psnr(&a, &b).unwrap(), 20.0, epsilon = 1e-9);
        assert_eq!(psnr(&a, &a).unwrap(), PSNR_CAP);
        assert_eq!(psnr(&a, &b).unwrap(), psnr(&b, &a).unwrap());
    }

    #[test]
    fn color_angle_examples() {
        let a = ColorImage::from_fn(3, 3, |r, c| [0.1 + 0.1 * r as f64, 0.2, 0.05 * c as f64]);
        assert!(loss_color_angle(&a, &a.map(|v| 2.5 * v)).unwrap() < 1e-15);
        let red = uniform(1, 1, [1.0, 0.0, 0.0]);
        let green = uniform(1, 1, [0.0, 1.0, 0.0]);
        assert_abs_diff_eq!(loss_color_angle(&red, &green).unwrap(), FRAC_PI_2, epsilon = 1e-15);
        let black = uniform(1, 1, [0.0; 3]);
        assert_eq!(loss_color_angle(&black, &red).unwrap(), 0.0);
    }

    #[test]
    fn enhancement_examples() {
        let en = ColorImage::from_fn(4, 4, |r, c| [0.2 + 0.1 * r as f64, 0.4, 0.1 * c as f64 + 0.05]);
        assert_eq!(loss_enhancement(&en, &en).unwrap(), 0.0);
        let half = en.map(|v| 0.5 * v);
        let mse_only = loss_reflectance_consistency(&en, &half).unwrap();
        assert_abs_diff_eq!(loss_enhancement(&en, &half).unwrap(), mse_only, epsilon = 1e-15);
    }

    #[test]
    fn ssim_examples() {
        let x = ColorImage::from_fn(16, 16, |r, c| [((r * 7 + c * 3) % 11) as f64 / 10.0, 0.5, (c % 2) as f64]);
        assert_abs_diff_eq!(ssim(&x, &x).unwrap(), 1.0, epsilon = 1e-12);

        let board = ColorImage::from_gray(ImagePlane::from_fn(16, 16, |r, c| ((r + c) % 2) as f64));
        let inverted = board.map(|v| 1.0 - v);
        assert!(ssim(&board, &inverted).unwrap() < 0.0);

        let small = uniform(10, 30, [0.5; 3]);
        assert_eq!(
            ssim(&small, &small),
            Err(Error::ImageTooSmall { height: 10, width: 30, min: 11 })
        );
    }

    #[test]
    fn loe_examples() {
        let ramp = ColorImage::from_gray(ImagePlane::from_fn(8, 8, |r, c| (r * 8 + c) as f64 / 64.0));
        assert_eq!(loe(&ramp, &ramp).unwrap(), 0.0);

        // brute-force pair count: every pair with distinct lightness flips
        let inverted = ramp.map(|v| 1.0 - v);
        let light: Vec<f64> = ramp.channel(0).as_slice().to_vec();
        let mut strict = 0usize;
        for a in &light {
            for b in &light {
                if a != b {
                    strict += 1;
                }
            }
        }
        let expected = 1000.0 * strict as f64 / (64.0 * 64.0);
        assert_abs_diff_eq!(loe(&inverted, &ramp).unwrap(), expected, epsilon = 1e-12);
        assert_abs_diff_eq!(expected, 984.375, epsilon = 1e-12);

        let remapped = ramp.map(|v| v.powf(0.4));
        assert_eq!(loe(&remapped, &ramp).unwrap(), 0.0);
    }

    #[test]
    fn loe_downsamples_large_inputs() {
        let big = ImagePlane::from_fn(120, 75, |r, c| (r + c) as f64);
        let small = downsample_nearest(&big, LOE_MAX_SIDE);
        assert_eq!(small.dims(), (50, 50));
        assert_eq!(small.get(1, 1), big.get(2, 1) );
    }

    #[test]
    fn report_serializes_flat() {
        let mut losses = BTreeMap::new();
        losses.insert("l_rec".to_string(), 0.5);
        let report = MetricsReport {
            psnr: Some(20.0),
            ssim: Some(0.9),
            loe: 12.0,
            loe_ref: None,
            finetune_loss_trace: Some(vec![0.2, 0.1]),
            losses,
        };
        let v: serde_json::Value = serde_json::to_value(&report).unwrap();
        assert_eq!(v["psnr"], 20.0);
        assert_eq!(v["l_rec"], 0.5);
        assert!(v["loe_ref"].is_null());
        assert_eq!(v["finetune_loss_trace"][1], 0.1);
        let back: MetricsReport = serde_json::from_value(v).unwrap();
        assert_eq!(back, report);
    }
}
