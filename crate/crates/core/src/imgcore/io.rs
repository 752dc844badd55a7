//! 8-bit grayscale PGM/PNG input and output.
//!
//! Loading maps `[0, 255]` to `[0, 1]` by division by 255; saving rounds
//! back after clamping.

use std::fs;
use std::io::Write;
use std::path::Path;

use image::{ImageFormat, Luma, Rgb};

use super::{BinaryMask, GrayImage};
use crate::error::{Error, Result};

pub fn read_gray(path: &Path) -> Result<GrayImage> {
    let input_err = |message: String| Error::Input {
        path: path.to_path_buf(),
        message,
    };
    let bytes = fs::read(path).map_err(|e| input_err(e.to_string()))?;
    let format = match path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .as_deref()
    {
        Some("pgm") | Some("pnm") => ImageFormat::Pnm,
        Some("png") => ImageFormat::Png,
        _ => image::guess_format(&bytes).map_err(|e| input_err(e.to_string()))?,
    };
    let decoded = image::load_from_memory_with_format(&bytes, format)
        .map_err(|e| input_err(e.to_string()))?;
    let luma = decoded.to_luma8();
    let (w, h) = luma.dimensions();
    let data = luma
        .into_raw()
        .into_iter()
        .map(|v| v as f64 / 255.0)
        .collect();
    GrayImage::new(w as usize, h as usize, data).map_err(|e| input_err(e.to_string()))
}

pub fn to_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn output_err(path: &Path, e: impl ToString) -> Error {
    Error::Output {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

/// Binary (P5) PGM with a fixed `P5\n<w> <h>\n255\n` header.
pub fn write_pgm(path: &Path, img: &GrayImage) -> Result<()> {
    let mut buf = Vec::with_capacity(img.len() + 32);
    write!(buf, "P5\n{} {}\n255\n", img.width(), img.height()).map_err(|e| output_err(path, e))?;
    buf.extend(img.data().iter().map(|&v| to_u8(v)));
    fs::write(path, buf).map_err(|e| output_err(path, e))
}

/// Mask as a 0/255 PGM.
pub fn write_mask_pgm(path: &Path, mask: &BinaryMask) -> Result<()> {
    write_pgm(path, &mask.to_image())
}

pub fn write_png(path: &Path, img: &GrayImage) -> Result<()> {
    let buf = image::ImageBuffer::<Luma<u8>, _>::from_raw(
        img.width() as u32,
        img.height() as u32,
        img.data().iter().map(|&v| to_u8(v)).collect::<Vec<_>>(),
    )
    .expect("buffer length matches dimensions");
    buf.save_with_format(path, ImageFormat::Png)
        .map_err(|e| output_err(path, e))
}

/// RGB raster, row-major `[r, g, b]` triples.
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn from_gray(img: &GrayImage) -> Self {
        Self {
            width: img.width(),
            height: img.height(),
            pixels: img
                .data()
                .iter()
                .map(|&v| {
                    let g = to_u8(v);
                    [g, g, g]
                })
                .collect(),
        }
    }

    pub fn paint(&mut self, mask: &BinaryMask, color: [u8; 3]) {
        for (px, &on) in self.pixels.iter_mut().zip(mask.bits()) {
            if on {
                *px = color;
            }
        }
    }

    pub fn write_png(&self, path: &Path) -> Result<()> {
        let buf = image::ImageBuffer::<Rgb<u8>, _>::from_raw(
            self.width as u32,
            self.height as u32,
            self.pixels.iter().flatten().copied().collect::<Vec<_>>(),
        )
        .expect("buffer length matches dimensions");
        buf.save_with_format(path, ImageFormat::Png)
            .map_err(|e| output_err(path, e))
    }
}
