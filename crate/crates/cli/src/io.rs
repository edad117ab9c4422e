//! PNG / PNM reading and 8-bit PNG writing.

use std::fs;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};

use image::{DynamicImage, ImageFormat, ImageReader};
use retinex_core::{ColorImage, ImagePlane};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: file not found")]
    Missing { path: PathBuf },
    #[error("{path}: unsupported format ({detail})")]
    Unsupported { path: PathBuf, detail: String },
    #[error("{path}: corrupt image ({detail})")]
    Corrupt { path: PathBuf, detail: String },
    #[error("{path}: {detail}")]
    Write { path: PathBuf, detail: String },
}

impl IoError {
    fn read(path: &Path, err: std::io::Error) -> Self {
        if err.kind() == ErrorKind::NotFound {
            IoError::Missing { path: path.to_owned() }
        } else {
            IoError::Corrupt {
                path: path.to_owned(),
                detail: err.to_string(),
            }
        }
    }
}

fn sniff(bytes: &[u8]) -> Option<ImageFormat> {
    match bytes {
        [0x89, b'P', b'N', b'G', ..] => Some(ImageFormat::Png),
        [b'P', b'5' | b'6', ..] => Some(ImageFormat::Pnm),
        _ => None,
    }
}

/// Reads a PNG or binary PGM/PPM into `[0, 1]` channels.
///
/// 8-bit samples are divided by 255 and 16-bit samples by 65535; gray files
/// are broadcast to three channels and alpha is dropped.
pub fn load_image(path: &Path) -> Result<ColorImage, IoError> {
    let bytes = fs::read(path).map_err(|e| IoError::read(path, e))?;
    let format = sniff(&bytes).ok_or_else(|| IoError::Unsupported {
        path: path.to_owned(),
        detail: "expected PNG or binary PGM/PPM".into(),
    })?;
    let decoded = ImageReader::with_format(std::io::Cursor::new(bytes), format)
        .decode()
        .map_err(|e| match e {
            image::ImageError::Unsupported(u) => IoError::Unsupported {
                path: path.to_owned(),
                detail: u.to_string(),
            },
            other => IoError::Corrupt {
                path: path.to_owned(),
                detail: other.to_string(),
            },
        })?;
    Ok(to_color_image(&decoded))
}

fn to_color_image(img: &DynamicImage) -> ColorImage {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let wide = img.color().bytes_per_pixel() / img.color().channel_count() > 1;
    let mut planes = [vec![0.0; w * h], vec![0.0; w * h], vec![0.0; w * h]];
    if wide {
        let rgb = img.to_rgb16();
        for (i, px) in rgb.pixels().enumerate() {
            for c in 0..3 {
                planes[c][i] = f64::from(px[c]) / 65535.0;
            }
        }
    } else {
        let rgb = img.to_rgb8();
        for (i, px) in rgb.pixels().enumerate() {
            for c in 0..3 {
                planes[c][i] = f64::from(px[c]) / 255.0;
            }
        }
    }
    let [r, g, b] = planes.map(|d| ImagePlane::new(h, w, d).expect("decoded sizes agree"));
    ColorImage::new(r, g, b).expect("decoded sizes agree")
}

/// Clip to `[0, 1]` and round half up to a byte.
pub fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0 + 0.5).floor() as u8
}

fn write_png(path: &Path, img: DynamicImage) -> Result<(), IoError> {
    img.save_with_format(path, ImageFormat::Png).map_err(|e| IoError::Write {
        path: path.to_owned(),
        detail: e.to_string(),
    })
}

/// Writes an 8-bit RGB PNG.
pub fn save_image(img: &ColorImage, path: &Path) -> Result<(), IoError> {
    let (h, w) = img.dims();
    let mut buf = Vec::with_capacity(h * w * 3);
    for r in 0..h {
        for c in 0..w {
            buf.extend(img.pixel(r, c).map(quantize));
        }
    }
    let rgb = image::RgbImage::from_raw(w as u32, h as u32, buf).expect("buffer sized to image");
    write_png(path, DynamicImage::ImageRgb8(rgb))
}

/// Writes an 8-bit grayscale PNG.
pub fn save_plane(plane: &ImagePlane, path: &Path) -> Result<(), IoError> {
    let (h, w) = plane.dims();
    let buf = plane.as_slice().iter().map(|&v| quantize(v)).collect();
    let gray = image::GrayImage::from_raw(w as u32, h as u32, buf).expect("buffer sized to plane");
    write_png(path, DynamicImage::ImageLuma8(gray))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantization_rounds_half_up_and_clips() {
        assert_eq!(quantize(0.5), 128);
        assert_eq!(quantize(0.0), 0);
        assert_eq!(quantize(1.0), 255);
        assert_eq!(quantize(-0.3), 0);
        assert_eq!(quantize(7.0), 255);
        assert_eq!(quantize(127.5 / 255.0 - 1e-9), 127);
    }

    #[test]
    fn sniffing() {
        assert_eq!(sniff(b"\x89PNG\r\n"), Some(ImageFormat::Png));
        assert_eq!(sniff(b"P6\n1 1\n255\n"), Some(ImageFormat::Pnm));
        assert_eq!(sniff(b"P3\n"), None);
        assert_eq!(sniff(b"GIF89a"), None);
    }
}
