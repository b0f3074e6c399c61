//! 8-bit image and CSV snapshots of fields, screens and crosstalk matrices.
//!
//! Image rows run from +y at the top to -y at the bottom. Intensity images
//! are normalized to their peak. Phase images map `φ mod 2π` linearly onto
//! 0..=255. Heatmaps use a fixed five-stop viridis ramp on the absolute
//! scale 0..=1, one 16×16 block per matrix entry, sent index left to right
//! and detected index top to bottom.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::field::{ComplexField, PhaseScreen};
use crate::profile::LineProfile;

/// Raw 8-bit image, grayscale (1 channel) or RGB (3 channels).
#[derive(Debug, Clone, PartialEq)]
pub struct Image8 {
    pub width: u32,
    pub height: u32,
    pub channels: u8,
    pub pixels: Vec<u8>,
}

const HEATMAP_CELL: usize = 16;

const VIRIDIS: [[f64; 3]; 5] = [
    [68.0, 1.0, 84.0],
    [59.0, 82.0, 139.0],
    [33.0, 145.0, 140.0],
    [94.0, 201.0, 98.0],
    [253.0, 231.0, 37.0],
];

/// `φ mod 2π` mapped linearly onto 0..=255.
pub fn phase_to_gray(phase: f64) -> u8 {
    let t = phase.rem_euclid(2.0 * PI) / (2.0 * PI);
    ((t * 256.0).floor() as i64).clamp(0, 255) as u8
}

pub fn colormap(value: f64) -> [u8; 3] {
    let t = value.clamp(0.0, 1.0) * (VIRIDIS.len() - 1) as f64;
    let k = (t.floor() as usize).min(VIRIDIS.len() - 2);
    let frac = t - k as f64;
    let mut out = [0u8; 3];
    for (c, o) in out.iter_mut().enumerate() {
        let v = VIRIDIS[k][c] + frac * (VIRIDIS[k + 1][c] - VIRIDIS[k][c]);
        *o = v.round() as u8;
    }
    out
}

fn gray_from(values: &Array2<f64>, map: impl Fn(f64) -> u8) -> Image8 {
    let (ny, nx) = values.dim();
    let mut pixels = Vec::with_capacity(nx * ny);
    for r in 0..ny {
        pixels.extend(values.row(ny - 1 - r).iter().map(|&v| map(v)));
    }
    Image8 {
        width: nx as u32,
        height: ny as u32,
        channels: 1,
        pixels,
    }
}

pub fn intensity_image(field: &ComplexField) -> Image8 {
    let intensity = field.intensity();
    let peak = intensity.iter().cloned().fold(0.0, f64::max);
    let scale = if peak > 0.0 { 255.0 / peak } else { 0.0 };
    gray_from(&intensity, |v| (v * scale).round().clamp(0.0, 255.0) as u8)
}

pub fn field_phase_image(field: &ComplexField) -> Image8 {
    gray_from(&field.data().mapv(|a| a.arg()), phase_to_gray)
}

pub fn screen_phase_image(screen: &PhaseScreen) -> Image8 {
    gray_from(&screen.to_array(), phase_to_gray)
}

/// False-colour rendering of a square probability matrix `p[k][j]`.
pub fn heatmap_image(p: &Array2<f64>) -> Image8 {
    let (rows, cols) = p.dim();
    let (w, h) = (cols * HEATMAP_CELL, rows * HEATMAP_CELL);
    let mut pixels = vec![0u8; w * h * 3];
    for y in 0..h {
        for x in 0..w {
            let rgb = colormap(p[[y / HEATMAP_CELL, x / HEATMAP_CELL]]);
            pixels[(y * w + x) * 3..(y * w + x) * 3 + 3].copy_from_slice(&rgb);
        }
    }
    Image8 {
        width: w as u32,
        height: h as u32,
        channels: 3,
        pixels,
    }
}

/// Writes a PNG with `metadata` stored as tEXt chunks.
pub fn write_png(path: &Path, image: &Image8, metadata: &[(&str, &str)]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut enc = png::Encoder::new(BufWriter::new(file), image.width, image.height);
    enc.set_color(if image.channels == 3 {
        png::ColorType::Rgb
    } else {
        png::ColorType::Grayscale
    });
    enc.set_depth(png::BitDepth::Eight);
    for (k, v) in metadata {
        enc.add_text_chunk(k.to_string(), v.to_string())?;
    }
    let mut writer = enc.write_header()?;
    writer.write_image_data(&image.pixels)?;
    writer.finish()?;
    Ok(())
}

/// CSV of a line profile: `coordinate_m,intensity`.
pub fn profile_csv(profile: &LineProfile) -> String {
    let mut s = String::from("coordinate_m,intensity\n");
    for (c, v) in profile.coords.iter().zip(&profile.values) {
        let _ = writeln!(s, "{c:.9e},{v:.9e}");
    }
    s
}

pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}
