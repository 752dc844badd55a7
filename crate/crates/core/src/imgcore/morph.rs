//! Flat grayscale morphology with disk structuring elements.
//!
//! The footprint is clipped to the frame, so erosion and dilation form an
//! adjunction and opening/closing are exactly idempotent, including at
//! the borders. Each disk is decomposed into horizontal runs and every run
//! width gets one van Herk/Gil-Werman pass, giving `O(r)` work per pixel.

use super::GrayImage;
use crate::error::{Error, Result};

/// Discrete disk `{(dx, dy) : dx^2 + dy^2 <= r^2}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DiskSE {
    radius: usize,
}

impl DiskSE {
    pub fn new(radius: usize) -> Result<Self> {
        if radius == 0 {
            return Err(Error::invalid("disk radius must be at least 1"));
        }
        Ok(Self { radius })
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    /// Half-width of the disk row at vertical offset `dy`.
    pub fn half_width(&self, dy: usize) -> usize {
        let r2 = self.radius * self.radius;
        let rest = r2 - dy * dy;
        let mut w = (rest as f64).sqrt() as usize;
        while (w + 1) * (w + 1) <= rest {
            w += 1;
        }
        while w * w > rest {
            w -= 1;
        }
        w
    }

    /// All offsets in the footprint.
    pub fn offsets(&self) -> Vec<(isize, isize)> {
        let r = self.radius as isize;
        let mut out = Vec::new();
        for dy in -r..=r {
            let hw = self.half_width(dy.unsigned_abs()) as isize;
            for dx in -hw..=hw {
                out.push((dx, dy));
            }
        }
        out
    }
}

/// Sliding minimum over `[x - hw, x + hw]` clipped to the row. `prefix` and
/// `suffix` are scratch buffers reused across calls.
fn row_min(row: &[f64], hw: usize, out: &mut [f64], prefix: &mut Vec<f64>, suffix: &mut Vec<f64>) {
    let n = row.len();
    if hw == 0 {
        out.copy_from_slice(row);
        return;
    }
    let win = 2 * hw + 1;
    let padded_len = (n + 2 * hw).div_ceil(win) * win;
    let at = |i: usize| {
        if i >= hw && i < hw + n {
            row[i - hw]
        } else {
            f64::INFINITY
        }
    };
    prefix.resize(padded_len, 0.0);
    suffix.resize(padded_len, 0.0);
    for block in (0..padded_len).step_by(win) {
        prefix[block] = at(block);
        for i in block + 1..block + win {
            prefix[i] = prefix[i - 1].min(at(i));
        }
        suffix[block + win - 1] = at(block + win - 1);
        for i in (block..block + win - 1).rev() {
            suffix[i] = suffix[i + 1].min(at(i));
        }
    }
    // window in padded coordinates is [x, x + win - 1]
    for (x, o) in out.iter_mut().enumerate() {
        *o = suffix[x].min(prefix[x + win - 1]);
    }
}

pub fn erode(img: &GrayImage, se: DiskSE) -> GrayImage {
    let (w, h) = img.dims();
    let r = se.radius;
    let widths: Vec<usize> = (0..=r).map(|dy| se.half_width(dy)).collect();
    let mut distinct = widths.clone();
    distinct.sort_unstable();
    distinct.dedup();

    // one row-min image per distinct run width
    let mut row_mins: Vec<Vec<f64>> = Vec::with_capacity(distinct.len());
    let (mut prefix, mut suffix) = (Vec::new(), Vec::new());
    for &hw in &distinct {
        let mut buf = vec![0.0; w * h];
        for y in 0..h {
            row_min(
                &img.data()[y * w..(y + 1) * w],
                hw,
                &mut buf[y * w..(y + 1) * w],
                &mut prefix,
                &mut suffix,
            );
        }
        row_mins.push(buf);
    }
    let slot: Vec<usize> = widths
        .iter()
        .map(|hw| distinct.binary_search(hw).unwrap())
        .collect();

    let mut out = vec![f64::INFINITY; w * h];
    for y in 0..h {
        let dst = &mut out[y * w..(y + 1) * w];
        let lo = y.saturating_sub(r);
        let hi = (y + r).min(h - 1);
        for sy in lo..=hi {
            let dy = sy.abs_diff(y);
            let src = &row_mins[slot[dy]][sy * w..(sy + 1) * w];
            for (o, &v) in dst.iter_mut().zip(src) {
                *o = if v < *o { v } else { *o };
            }
        }
    }
    GrayImage::from_raw(w, h, out)
}

pub fn dilate(img: &GrayImage, se: DiskSE) -> GrayImage {
    erode(&img.map(|v| -v), se).map(|v| -v)
}

pub fn morph_open(img: &GrayImage, se: DiskSE) -> GrayImage {
    dilate(&erode(img, se), se)
}

pub fn morph_close(img: &GrayImage, se: DiskSE) -> GrayImage {
    erode(&dilate(img, se), se)
}
