//! File formats: radian CSV signals, grayscale angle maps, hue images and
//! mask images.

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::path::Path;

use image::{DynamicImage, GrayImage, ImageBuffer, Luma, Rgb, RgbImage};

use crate::error::{Error, Result};
use crate::field::{AngleField, GridSpec, Mask};

fn open_image(path: &Path) -> Result<DynamicImage> {
    let reader = image::ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?;
    reader.decode().map_err(|source| Error::Image {
        path: path.to_owned(),
        source,
    })
}

fn save_image(img: DynamicImage, path: &Path) -> Result<()> {
    img.save(path).map_err(|source| Error::Image {
        path: path.to_owned(),
        source,
    })
}

/// Reads one radian value per line. Blank lines are skipped.
pub fn load_signal_csv(path: &Path, extent: f64) -> Result<AngleField> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut values = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let v: f64 = line.parse().map_err(|_| Error::Parse {
            path: path.to_owned(),
            line: n + 1,
            message: format!("expected a radian value, found {line:?}"),
        })?;
        if !v.is_finite() {
            return Err(Error::Parse {
                path: path.to_owned(),
                line: n + 1,
                message: format!("value {v} is not finite"),
            });
        }
        values.push(v);
    }
    if values.is_empty() {
        return Err(Error::Parse {
            path: path.to_owned(),
            line: 0,
            message: "file holds no values".into(),
        });
    }
    AngleField::new(GridSpec::line(values.len(), extent)?, values)
}

/// Writes one value per line in shortest round-trip form.
pub fn save_signal_csv(field: &AngleField, path: &Path) -> Result<()> {
    let mut out = String::with_capacity(field.len() * 20);
    for v in field.values() {
        writeln!(out, "{v}").expect("writing to a String");
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads an 8- or 16-bit grayscale PNG or PGM; pixel `v` becomes
/// `2π v / (max + 1)`.
pub fn load_angle_image(path: &Path) -> Result<AngleField> {
    let img = open_image(path)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let values: Vec<f64> = match &img {
        DynamicImage::ImageLuma8(b) => b.pixels().map(|p| TAU * p.0[0] as f64 / 256.0).collect(),
        DynamicImage::ImageLuma16(b) => b.pixels().map(|p| TAU * p.0[0] as f64 / 65536.0).collect(),
        other => {
            return Err(Error::Unsupported {
                path: path.to_owned(),
                message: format!("expected 8- or 16-bit grayscale, found {:?}", other.color()),
            })
        }
    };
    AngleField::new(GridSpec::image(h, w)?, values)
}

fn shape(field: &AngleField) -> (u32, u32) {
    let (rows, cols) = field.grid().shape();
    (cols as u32, rows as u32)
}

/// Writes a 16-bit grayscale PNG, the inverse of [`load_angle_image`] up to
/// quantization.
pub fn save_angle_image(field: &AngleField, path: &Path) -> Result<()> {
    let (w, h) = shape(field);
    let data: Vec<u16> = field
        .values()
        .iter()
        .map(|&a| ((a / TAU * 65536.0).round() as u32 % 65536) as u16)
        .collect();
    let buf: ImageBuffer<Luma<u16>, Vec<u16>> = ImageBuffer::from_raw(w, h, data).expect("buffer matches the grid");
    save_image(DynamicImage::ImageLuma16(buf), path)
}

/// Hexagonal hue of an RGB triple in radians; gray pixels give 0.
pub fn hue(r: f64, g: f64, b: f64) -> f64 {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let c = max - min;
    if c == 0.0 {
        return 0.0;
    }
    let sector = if max == r {
        ((g - b) / c).rem_euclid(6.0)
    } else if max == g {
        (b - r) / c + 2.0
    } else {
        (r - g) / c + 4.0
    };
    let h = sector * TAU / 6.0;
    if h >= TAU {
        0.0
    } else {
        h
    }
}

/// Hue channel of an RGB or RGBA image. Alpha is ignored.
pub fn extract_hue(path: &Path) -> Result<AngleField> {
    let img = open_image(path)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let values: Vec<f64> = match &img {
        DynamicImage::ImageRgb8(_) | DynamicImage::ImageRgba8(_) => img
            .to_rgb8()
            .pixels()
            .map(|p| hue(p.0[0] as f64, p.0[1] as f64, p.0[2] as f64))
            .collect(),
        DynamicImage::ImageRgb16(_) | DynamicImage::ImageRgba16(_) => img
            .to_rgb16()
            .pixels()
            .map(|p| hue(p.0[0] as f64, p.0[1] as f64, p.0[2] as f64))
            .collect(),
        other => {
            return Err(Error::Unsupported {
                path: path.to_owned(),
                message: format!("expected an RGB image, found {:?}", other.color()),
            })
        }
    };
    AngleField::new(GridSpec::image(h, w)?, values)
}

/// Fully saturated, full-value color of a hue angle.
pub fn hsv_color(angle: f64) -> [u8; 3] {
    let x = angle / TAU * 6.0;
    let sector = (x.floor() as usize).min(5);
    let f = x - sector as f64;
    let up = (255.0 * f).round() as u8;
    let down = (255.0 * (1.0 - f)).round() as u8;
    match sector {
        0 => [255, up, 0],
        1 => [down, 255, 0],
        2 => [0, 255, up],
        3 => [0, down, 255],
        4 => [up, 0, 255],
        _ => [255, 0, down],
    }
}

/// Renders angles as hues with saturation and value 1, as an RGB PNG.
pub fn render_hsv(field: &AngleField, path: &Path) -> Result<()> {
    let (w, h) = shape(field);
    let data: Vec<u8> = field.values().iter().flat_map(|&a| hsv_color(a)).collect();
    let buf: RgbImage = ImageBuffer::<Rgb<u8>, _>::from_raw(w, h, data).expect("buffer matches the grid");
    save_image(DynamicImage::ImageRgb8(buf), path)
}

/// Reads a mask image on its own image grid: any nonzero channel marks an
/// unknown pixel.
pub fn read_mask(path: &Path) -> Result<Mask> {
    let img = open_image(path)?;
    let grid = GridSpec::image(img.height() as usize, img.width() as usize)?;
    let known = img.to_rgb16().pixels().map(|p| p.0.iter().all(|&c| c == 0)).collect();
    Mask::new(grid, known)
}

/// [`read_mask`] for a field on `grid`, which must have the same shape.
pub fn load_mask(path: &Path, grid: &GridSpec) -> Result<Mask> {
    let mask = read_mask(path)?;
    let (rows, cols) = grid.shape();
    if mask.grid().shape() != (rows, cols) {
        let (r, c) = mask.grid().shape();
        return Err(Error::GridMismatch(format!(
            "mask {} is {r}x{c} but the field is {rows}x{cols}",
            path.display()
        )));
    }
    Mask::new(*grid, mask.known().to_vec())
}

/// Writes a mask as 8-bit grayscale: 255 unknown, 0 known.
pub fn save_mask(mask: &Mask, path: &Path) -> Result<()> {
    let (rows, cols) = mask.grid().shape();
    let data = mask.known().iter().map(|&k| if k { 0 } else { 255 }).collect();
    let buf: GrayImage = ImageBuffer::from_raw(cols as u32, rows as u32, data).expect("buffer matches the grid");
    save_image(DynamicImage::ImageLuma8(buf), path)
}
