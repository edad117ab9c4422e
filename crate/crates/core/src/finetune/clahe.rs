//! Contrast-limited adaptive histogram equalization on a `[0, 1]` plane.

use crate::plane::ImagePlane;

const BINS: usize = 256;

#[inline]
fn bin_of(v: f64) -> usize {
    ((v.clamp(0.0, 1.0) * (BINS - 1) as f64).round() as usize).min(BINS - 1)
}

/// Row (or column) range covered by tile `i` of `n` over `extent` pixels.
fn tile_span(i: usize, n: usize, extent: usize) -> (usize, usize) {
    (i * extent / n, (i + 1) * extent / n)
}

/// Clipped-histogram lookup table for one tile. Each bin maps to the midpoint
/// of its cumulative-distribution step, so a flat histogram maps close to
/// the identity.
fn tile_lut(plane: &ImagePlane, rows: (usize, usize), cols: (usize, usize), clip_limit: f64) -> [f64; BINS] {
    let mut hist = [0.0f64; BINS];
    for r in rows.0..rows.1 {
        for c in cols.0..cols.1 {
            hist[bin_of(plane.get(r, c))] += 1.0;
        }
    }
    let n = ((rows.1 - rows.0) * (cols.1 - cols.0)) as f64;
    let limit = (clip_limit * n / BINS as f64).max(1.0);
    let mut excess = 0.0;
    for h in hist.iter_mut() {
        if *h > limit {
            excess += *h - limit;
            *h = limit;
        }
    }
    let share = excess / BINS as f64;
    let mut lut = [0.0; BINS];
    let mut cdf = 0.0;
    for (h, out) in hist.iter().zip(lut.iter_mut()) {
        let h = h + share;
        *out = (cdf + 0.5 * h) / n;
        cdf += h;
    }
    lut
}

/// Fractional tile coordinate of pixel index `p`, between tile centers.
fn tile_coord(p: usize, n_tiles: usize, extent: usize) -> (usize, usize, f64) {
    let t = (p as f64 + 0.5) * n_tiles as f64 / extent as f64 - 0.5;
    let t = t.clamp(0.0, (n_tiles - 1) as f64);
    let i0 = t.floor() as usize;
    let i1 = (i0 + 1).min(n_tiles - 1);
    (i0, i1, t - i0 as f64)
}

/// CLAHE with `tiles x tiles` regions (fewer on small planes), 256 bins and
/// bilinear blending between neighboring tile mappings.
pub fn clahe(plane: &ImagePlane, tiles: usize, clip_limit: f64) -> ImagePlane {
    let (h, w) = plane.dims();
    let ty = tiles.clamp(1, h);
    let tx = tiles.clamp(1, w);
    let luts: Vec<[f64; BINS]> = (0..ty)
        .flat_map(|i| (0..tx).map(move |j| (i, j)))
        .map(|(i, j)| tile_lut(plane, tile_span(i, ty, h), tile_span(j, tx, w), clip_limit))
        .collect();

    ImagePlane::from_fn(h, w, |r, c| {
        let b = bin_of(plane.get(r, c));
        let (i0, i1, wy) = tile_coord(r, ty, h);
        let (j0, j1, wx) = tile_coord(c, tx, w);
        let at = |i: usize, j: usize| luts[i * tx + j][b];
        let top = (1.0 - wx) * at(i0, j0) + wx * at(i0, j1);
        let bottom = (1.0 - wx) * at(i1, j0) + wx * at(i1, j1);
        ((1.0 - wy) * top + wy * bottom).clamp(0.0, 1.0)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn std_dev(values: &[f64]) -> f64 {
        let m = values.iter().sum::<f64>() / values.len() as f64;
        (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / values.len() as f64).sqrt()
    }

    #[test]
    fn constant_plane_maps_to_a_nearby_constant() {
        let p = ImagePlane::filled(32, 32, 0.5);
        let out = clahe(&p, 8, 2.0);
        assert_eq!(out.min(), out.max());
        assert!((out.get(0, 0) - 0.5).abs() <= 2.0 / 255.0);
    }

    #[test]
    fn unclipped_equalization_spreads_a_narrow_ramp() {
        let p = ImagePlane::from_fn(16, 16, |r, c| 0.4 + 0.1 * (r * 16 + c) as f64 / 255.0);
        let out = clahe(&p, 1, 1000.0);
        assert!(out.max() - out.min() > 0.9);
    }

    #[test]
    fn dark_half_gains_contrast() {
        let p = ImagePlane::from_fn(32, 32, |r, c| {
            let texture = 0.02 * (((r * 5 + c * 3) % 7) as f64 / 6.0);
            if c < 16 {
                0.05 + texture
            } else {
                0.7 + texture
            }
        });
        let out = clahe(&p, 8, 2.0);
        let half = |q: &ImagePlane| -> Vec<f64> {
            (0..32).flat_map(|r| (0..16).map(move |c| (r, c))).map(|(r, c)| q.get(r, c)).collect()
        };
        assert!(std_dev(&half(&out)) > std_dev(&half(&p)));
    }

    #[test]
    fn output_stays_in_unit_range() {
        let p = ImagePlane::from_fn(20, 13, |r, c| ((r * 31 + c * 17) % 101) as f64 / 100.0);
        let out = clahe(&p, 8, 3.0);
        assert!(out.min() >= 0.0 && out.max() <= 1.0);
    }
}
