//! Dense image planes, element-wise algebra and the 3-tap difference operators.
//!
//! Planes are row-major `f64` grids. Color images are three planes of equal
//! size. The only convolutions provided are the two central-difference
//! kernels `[1, 0, -1]` (vertical and horizontal) and their exact adjoints,
//! both with replicate (edge-clamp) boundary handling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Guard used by every guarded division unless a config overrides it.
pub const DEFAULT_EPS_DIV: f64 = 1e-4;

/// BT.601 luma weights for (r, g, b).
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

#[derive(Debug, Clone, PartialEq)]
pub struct ImagePlane {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl ImagePlane {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::EmptyPlane);
        }
        if data.len() != height * width {
            return Err(Error::BadDataLength {
                height,
                width,
                len: data.len(),
            });
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue { index });
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    /// # Panics
    /// If either dimension is zero or `value` is not finite.
    pub fn filled(height: usize, width: usize, value: f64) -> Self {
        assert!(height > 0 && width > 0, "plane dimensions must be positive");
        assert!(value.is_finite(), "fill value must be finite");
        Self {
            height,
            width,
            data: vec![value; height * width],
        }
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self::filled(height, width, 0.0)
    }

    /// Builds a plane from `f(row, col)`.
    ///
    /// # Panics
    /// If either dimension is zero or `f` yields a non-finite value.
    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(height > 0 && width > 0, "plane dimensions must be positive");
        let mut data = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                let v = f(r, c);
                assert!(v.is_finite(), "non-finite value at ({r}, {c})");
                data.push(v);
            }
        }
        Self {
            height,
            width,
            data,
        }
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    /// Always false; planes are never empty.
    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    #[cfg(test)]
    pub(crate) fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.width + col] = value;
    }

    /// Applies `f` to every value. `f` must keep values finite.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        let data: Vec<f64> = self.data.iter().map(|&v| f(v)).collect();
        debug_assert!(data.iter().all(|v| v.is_finite()));
        Self {
            height: self.height,
            width: self.width,
            data,
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_same(other)?;
        let data: Vec<f64> = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f(a, b))
            .collect();
        debug_assert!(data.iter().all(|v| v.is_finite()));
        Ok(Self {
            height: self.height,
            width: self.width,
            data,
        })
    }

    pub fn check_same(&self, other: &Self) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                found: other.dims(),
            });
        }
        Ok(())
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.data.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Frobenius inner product.
    pub fn dot(&self, other: &Self) -> Result<f64> {
        self.check_same(other)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    pub fn sq_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn scale(&self, k: f64) -> Self {
        self.map(|v| v * k)
    }

    /// Projection onto the non-negative orthant.
    pub fn clamp_nonneg(&self) -> Self {
        self.map(|v| v.max(0.0))
    }

    pub fn clamp(&self, lo: f64, hi: f64) -> Self {
        self.map(|v| v.clamp(lo, hi))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        ewise(self, other, EwiseOp::Add)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        ewise(self, other, EwiseOp::Sub)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        ewise(self, other, EwiseOp::Mul)
    }

    fn extent(&self, axis: Axis) -> usize {
        match axis {
            Axis::Vertical => self.height,
            Axis::Horizontal => self.width,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EwiseOp {
    Mul,
    Div,
    Add,
    Sub,
}

/// Element-wise `a op b`; division uses [`DEFAULT_EPS_DIV`] as guard.
pub fn ewise(a: &ImagePlane, b: &ImagePlane, op: EwiseOp) -> Result<ImagePlane> {
    ewise_guarded(a, b, op, DEFAULT_EPS_DIV)
}

/// Element-wise `a op b`. Division computes `a / max(b, eps_div)`.
pub fn ewise_guarded(
    a: &ImagePlane,
    b: &ImagePlane,
    op: EwiseOp,
    eps_div: f64,
) -> Result<ImagePlane> {
    match op {
        EwiseOp::Mul => a.zip_map(b, |x, y| x * y),
        EwiseOp::Add => a.zip_map(b, |x, y| x + y),
        EwiseOp::Sub => a.zip_map(b, |x, y| x - y),
        EwiseOp::Div => a.zip_map(b, |x, y| guarded_div(x, y, eps_div)),
    }
}

#[inline]
pub fn guarded_div(num: f64, den: f64, eps_div: f64) -> f64 {
    let q = num / den.max(eps_div);
    if q.is_finite() {
        q
    } else {
        // only reachable when |num| is near f64::MAX
        q.clamp(f64::MIN, f64::MAX)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    /// Differences between rows (top neighbor minus bottom neighbor).
    Vertical,
    /// Differences between columns (left neighbor minus right neighbor).
    Horizontal,
}

impl Axis {
    pub const BOTH: [Axis; 2] = [Axis::Vertical, Axis::Horizontal];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DifferenceKernel {
    axis: Axis,
}

impl DifferenceKernel {
    pub const TAPS: [f64; 3] = [1.0, 0.0, -1.0];

    pub const fn new(axis: Axis) -> Self {
        Self { axis }
    }

    pub const fn vertical() -> Self {
        Self::new(Axis::Vertical)
    }

    pub const fn horizontal() -> Self {
        Self::new(Axis::Horizontal)
    }

    pub const fn axis(&self) -> Axis {
        self.axis
    }
}

impl From<Axis> for DifferenceKernel {
    fn from(axis: Axis) -> Self {
        Self::new(axis)
    }
}

fn check_extent(img: &ImagePlane, axis: Axis) -> Result<()> {
    let extent = img.extent(axis);
    if extent < 3 {
        return Err(Error::AxisTooShort { axis, extent });
    }
    Ok(())
}

/// Flat indices of the clamped previous and next neighbors of `(r, c)`.
#[inline]
fn neighbors(h: usize, w: usize, r: usize, c: usize, axis: Axis) -> (usize, usize) {
    match axis {
        Axis::Vertical => {
            let prev = r.saturating_sub(1);
            let next = (r + 1).min(h - 1);
            (prev * w + c, next * w + c)
        }
        Axis::Horizontal => {
            let prev = c.saturating_sub(1);
            let next = (c + 1).min(w - 1);
            (r * w + prev, r * w + next)
        }
    }
}

/// Correlation with `[1, 0, -1]` along the kernel axis, replicate padding.
pub fn diff_conv(img: &ImagePlane, k: DifferenceKernel) -> Result<ImagePlane> {
    check_extent(img, k.axis)?;
    let (h, w) = img.dims();
    let src = img.as_slice();
    let mut out = Vec::with_capacity(h * w);
    for r in 0..h {
        for c in 0..w {
            let (prev, next) = neighbors(h, w, r, c, k.axis);
            out.push(src[prev] - src[next]);
        }
    }
    Ok(ImagePlane {
        height: h,
        width: w,
        data: out,
    })
}

/// Exact adjoint of [`diff_conv`] under the Frobenius inner product.
pub fn diff_conv_transpose(img: &ImagePlane, k: DifferenceKernel) -> Result<ImagePlane> {
    check_extent(img, k.axis)?;
    let (h, w) = img.dims();
    let src = img.as_slice();
    let mut out = vec![0.0; h * w];
    for r in 0..h {
        for c in 0..w {
            let (prev, next) = neighbors(h, w, r, c, k.axis);
            let v = src[r * w + c];
            out[prev] += v;
            out[next] -= v;
        }
    }
    Ok(ImagePlane {
        height: h,
        width: w,
        data: out,
    })
}

/// Three same-sized planes in (r, g, b) order.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorImage {
    channels: [ImagePlane; 3],
}

impl ColorImage {
    pub fn new(r: ImagePlane, g: ImagePlane, b: ImagePlane) -> Result<Self> {
        r.check_same(&g)?;
        r.check_same(&b)?;
        Ok(Self {
            channels: [r, g, b],
        })
    }

    pub fn from_channels(channels: [ImagePlane; 3]) -> Result<Self> {
        let [r, g, b] = channels;
        Self::new(r, g, b)
    }

    /// Broadcasts one plane to all three channels.
    pub fn from_gray(plane: ImagePlane) -> Self {
        Self {
            channels: [plane.clone(), plane.clone(), plane],
        }
    }

    pub fn filled(height: usize, width: usize, rgb: [f64; 3]) -> Self {
        Self {
            channels: rgb.map(|v| ImagePlane::filled(height, width, v)),
        }
    }

    /// Builds an image from `f(row, col) -> [r, g, b]`.
    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> [f64; 3]) -> Self {
        let mut data = [
            Vec::with_capacity(height * width),
            Vec::with_capacity(height * width),
            Vec::with_capacity(height * width),
        ];
        for r in 0..height {
            for c in 0..width {
                let px = f(r, c);
                for (ch, v) in data.iter_mut().zip(px) {
                    ch.push(v);
                }
            }
        }
        let [r, g, b] = data;
        Self::new(
            ImagePlane::new(height, width, r).expect("from_fn produced an invalid plane"),
            ImagePlane::new(height, width, g).expect("from_fn produced an invalid plane"),
            ImagePlane::new(height, width, b).expect("from_fn produced an invalid plane"),
        )
        .expect("channels share dimensions")
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        self.channels[0].dims()
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.channels[0].height()
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.channels[0].width()
    }

    /// Pixel count of one channel.
    #[inline]
    pub fn pixel_count(&self) -> usize {
        self.channels[0].len()
    }

    #[inline]
    pub fn channel(&self, c: usize) -> &ImagePlane {
        &self.channels[c]
    }

    pub fn channels(&self) -> &[ImagePlane; 3] {
        &self.channels
    }

    pub fn into_channels(self) -> [ImagePlane; 3] {
        self.channels
    }

    pub fn pixel(&self, row: usize, col: usize) -> [f64; 3] {
        [0, 1, 2].map(|c| self.channels[c].get(row, col))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            channels: [0, 1, 2].map(|c| self.channels[c].map(&f)),
        }
    }

    pub fn map_channels(&self, mut f: impl FnMut(usize, &ImagePlane) -> ImagePlane) -> Result<Self> {
        let channels = [0, 1, 2].map(|c| f(c, &self.channels[c]));
        Self::from_channels(channels)
    }

    pub fn try_map_channels(
        &self,
        mut f: impl FnMut(usize, &ImagePlane) -> Result<ImagePlane>,
    ) -> Result<Self> {
        let r = f(0, &self.channels[0])?;
        let g = f(1, &self.channels[1])?;
        let b = f(2, &self.channels[2])?;
        Self::new(r, g, b)
    }

    pub fn check_same(&self, other: &Self) -> Result<()> {
        self.channels[0].check_same(&other.channels[0])
    }

    pub fn check_plane(&self, plane: &ImagePlane) -> Result<()> {
        self.channels[0].check_same(plane)
    }

    pub fn clamp(&self, lo: f64, hi: f64) -> Self {
        self.map(|v| v.clamp(lo, hi))
    }

    /// Mean over all channels and pixels.
    pub fn mean(&self) -> f64 {
        self.channels.iter().map(ImagePlane::mean).sum::<f64>() / 3.0
    }

    pub fn min(&self) -> f64 {
        self.channels.iter().map(ImagePlane::min).fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.channels
            .iter()
            .map(ImagePlane::max)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Per-pixel maximum over channels.
    pub fn max_channel(&self) -> ImagePlane {
        let [r, g, b] = &self.channels;
        let data = r
            .as_slice()
            .iter()
            .zip(g.as_slice())
            .zip(b.as_slice())
            .map(|((&r, &g), &b)| r.max(g).max(b))
            .collect();
        ImagePlane {
            height: r.height,
            width: r.width,
            data,
        }
    }

    /// Multiplies every channel by `plane`.
    pub fn mul_plane(&self, plane: &ImagePlane) -> Result<Self> {
        self.try_map_channels(|_, ch| ch.mul(plane))
    }
}

/// BT.601 luma.
pub fn to_gray(img: &ColorImage) -> ImagePlane {
    let [r, g, b] = img.channels();
    let [wr, wg, wb] = LUMA_WEIGHTS;
    let data = r
        .as_slice()
        .iter()
        .zip(g.as_slice())
        .zip(b.as_slice())
        .map(|((&r, &g), &b)| wr * r + wg * g + wb * b)
        .collect();
    ImagePlane {
        height: r.height,
        width: r.width,
        data,
    }
}
