//! Amplified target gradients and the two Newton-type descent directions.

use crate::error::Result;
use crate::plane::{
    diff_conv, diff_conv_transpose, guarded_div, Axis, ColorImage, DifferenceKernel, ImagePlane,
};

/// Per-channel amplified gradients `G_x` (horizontal) and `G_y` (vertical).
#[derive(Debug, Clone, PartialEq)]
pub struct AmplifiedGradient {
    pub gx: ColorImage,
    pub gy: ColorImage,
}

impl AmplifiedGradient {
    pub fn along(&self, axis: Axis) -> &ColorImage {
        match axis {
            Axis::Horizontal => &self.gx,
            Axis::Vertical => &self.gy,
        }
    }

    /// All-zero target, which turns the structure prior into a plain
    /// gradient-energy penalty.
    pub fn zeros(height: usize, width: usize) -> Self {
        Self {
            gx: ColorImage::filled(height, width, [0.0; 3]),
            gy: ColorImage::filled(height, width, [0.0; 3]),
        }
    }
}

/// `G_i = (1 + lambda * exp(-|d_i * I| / sigma)) * (d_i * I)` per channel and axis.
///
/// Weak gradients are boosted by up to `1 + lambda`; strong ones stay close
/// to their raw value.
pub fn amplified_gradient(img: &ColorImage, lambda: f64, sigma: f64) -> Result<AmplifiedGradient> {
    let amplify = |axis: Axis| {
        img.try_map_channels(|_, ch| {
            let g = diff_conv(ch, DifferenceKernel::new(axis))?;
            Ok(g.map(|v| (1.0 + lambda * (-v.abs() / sigma).exp()) * v))
        })
    };
    Ok(AmplifiedGradient {
        gx: amplify(Axis::Horizontal)?,
        gy: amplify(Axis::Vertical)?,
    })
}

/// Newton direction for the shared illumination plane.
///
/// With one illumination plane and three reflectance channels, the data
/// term `1/2 sum_c ||I_c - R_c L||^2` has gradient `sum_c R_c (R_c L - I_c)`
/// and diagonal Hessian `sum_c R_c^2`; the direction is their guarded ratio.
/// With equal channels this is `(R (R L - I)) / (R R)`.
pub fn newton_dir_l(
    reflectance: &ColorImage,
    illumination: &ImagePlane,
    img: &ColorImage,
    eps_div: f64,
) -> Result<ImagePlane> {
    reflectance.check_same(img)?;
    reflectance.check_plane(illumination)?;
    let l = illumination.as_slice();
    let mut num = vec![0.0; l.len()];
    let mut den = vec![0.0; l.len()];
    for (r_ch, i_ch) in reflectance.channels().iter().zip(img.channels()) {
        for (p, (&r, &i)) in r_ch.as_slice().iter().zip(i_ch.as_slice()).enumerate() {
            num[p] += r * (r * l[p] - i);
            den[p] += r * r;
        }
    }
    let data = num
        .iter()
        .zip(&den)
        .map(|(&n, &d)| guarded_div(n, d, eps_div))
        .collect();
    ImagePlane::new(illumination.height(), illumination.width(), data)
}

/// `sum_i d_i^T (d_i R_c - G_{i,c})` for one channel.
pub(crate) fn prior_gradient(
    r_ch: &ImagePlane,
    grad: &AmplifiedGradient,
    channel: usize,
) -> Result<ImagePlane> {
    let mut acc: Option<ImagePlane> = None;
    for axis in Axis::BOTH {
        let k = DifferenceKernel::new(axis);
        let residual = diff_conv(r_ch, k)?.sub(grad.along(axis).channel(channel))?;
        let back = diff_conv_transpose(&residual, k)?;
        acc = Some(match acc {
            None => back,
            Some(a) => a.add(&back)?,
        });
    }
    Ok(acc.expect("two axes"))
}

/// Quasi-Newton direction for the reflectance, using the diagonal Hessian
/// bound `L*L + 4*gamma`.
pub fn newton_dir_r(
    reflectance: &ColorImage,
    illumination: &ImagePlane,
    img: &ColorImage,
    grad: &AmplifiedGradient,
    gamma: f64,
    eps_div: f64,
) -> Result<ColorImage> {
    reflectance.check_same(img)?;
    reflectance.check_plane(illumination)?;
    reflectance.check_same(&grad.gx)?;
    let l = illumination.as_slice();
    reflectance.try_map_channels(|c, r_ch| {
        let prior = prior_gradient(r_ch, grad, c)?;
        let data = r_ch
            .as_slice()
            .iter()
            .zip(img.channel(c).as_slice())
            .zip(prior.as_slice())
            .zip(l)
            .map(|(((&r, &i), &p), &l)| {
                let num = (r * l - i) * l + 0.5 * gamma * p;
                guarded_div(num, l * l + 4.0 * gamma, eps_div)
            })
            .collect();
        ImagePlane::new(r_ch.height(), r_ch.width(), data)
    })
}
