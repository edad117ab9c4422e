//! Deterministic synthetic scenes with known reflectance and illumination.
//!
//! Used by tests, benchmarks and the bundled sample corpus. Every scene is a
//! pure function of its size and seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::plane::{ColorImage, ImagePlane};

/// An image together with the factors that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub reflectance: ColorImage,
    pub illumination: ImagePlane,
    pub image: ColorImage,
}

/// Smooth illumination in `[lo, hi]` built from a few low-frequency waves.
pub fn smooth_illumination(height: usize, width: usize, lo: f64, hi: f64, seed: u64) -> ImagePlane {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let waves: Vec<(f64, f64, f64, f64)> = (0..3)
        .map(|_| {
            (
                rng.random_range(0.3..1.2),
                rng.random_range(0.3..1.2),
                rng.random_range(0.0..std::f64::consts::TAU),
                rng.random_range(0.5..1.0),
            )
        })
        .collect();
    let total: f64 = waves.iter().map(|w| w.3).sum();
    ImagePlane::from_fn(height, width, |r, c| {
        let y = r as f64 / height as f64;
        let x = c as f64 / width as f64;
        let s: f64 = waves
            .iter()
            .map(|&(fx, fy, phase, amp)| amp * (std::f64::consts::PI * (fx * x + fy * y) + phase).cos())
            .sum();
        // s / total lies in [-1, 1]
        lo + (hi - lo) * 0.5 * (1.0 + s / total)
    })
}

/// Piecewise-constant reflectance: rectangular patches whose channels lie in
/// `[lo, 1]` with the largest channel of every patch exactly 1.
pub fn patch_reflectance(height: usize, width: usize, patch: usize, lo: f64, seed: u64) -> ColorImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let rows = height.div_ceil(patch);
    let cols = width.div_ceil(patch);
    let colors: Vec<[f64; 3]> = (0..rows * cols)
        .map(|_| {
            let mut px = [0.0; 3];
            for v in &mut px {
                *v = rng.random_range(lo..=1.0);
            }
            px[rng.random_range(0..3)] = 1.0;
            px
        })
        .collect();
    ColorImage::from_fn(height, width, |r, c| colors[(r / patch) * cols + c / patch])
}

/// `R * L` with smooth `L` in `[lo, hi]` and patchy `R` in `[0.8, 1]`.
pub fn factored_scene(height: usize, width: usize, lo: f64, hi: f64, seed: u64) -> Scene {
    let illumination = smooth_illumination(height, width, lo, hi, seed);
    let reflectance = patch_reflectance(height, width, 16, 0.8, seed);
    let image = reflectance
        .mul_plane(&illumination)
        .expect("factors share dimensions");
    Scene {
        reflectance,
        illumination,
        image,
    }
}

/// A normal-light scene and a darkened copy with additive noise.
///
/// The dark copy is `R * (scale * L) + noise`, clipped to `[0, 1]`.
pub fn dark_pair(height: usize, width: usize, scale: f64, noise: f64, seed: u64) -> (ColorImage, ColorImage) {
    let bright = textured_scene(height, width, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(31).wrapping_add(7));
    let dark = ColorImage::from_fn(height, width, |r, c| {
        bright.pixel(r, c).map(|v| {
            let n = if noise > 0.0 { rng.random_range(-noise..noise) } else { 0.0 };
            (scale * v + n).clamp(0.0, 1.0)
        })
    });
    (dark, bright)
}

/// A natural-looking normal-light scene: shaded patches, a soft gradient and
/// fine texture, values in `[0, 1]`.
pub fn textured_scene(height: usize, width: usize, seed: u64) -> ColorImage {
    let light = smooth_illumination(height, width, 0.45, 0.95, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5151);
    let patch = 12;
    let cols = width.div_ceil(patch);
    let rows = height.div_ceil(patch);
    let colors: Vec<[f64; 3]> = (0..rows * cols)
        .map(|_| [rng.random_range(0.2..1.0), rng.random_range(0.2..1.0), rng.random_range(0.2..1.0)])
        .collect();
    let texture: Vec<f64> = (0..height * width).map(|_| rng.random_range(-0.04..0.04)).collect();
    ColorImage::from_fn(height, width, |r, c| {
        let base = colors[(r / patch) * cols + c / patch];
        let l = light.get(r, c);
        let t = texture[r * width + c];
        base.map(|v| (v * l + t).clamp(0.0, 1.0))
    })
}
