//! Direct-definition versions of the optimized kernels, for cross-checking.
//! No running sums, no separability, no search-window bookkeeping.

use crate::enhance::GuidedParams;
use crate::error::Result;
use crate::imgcore::{ensure_same_dims, BinaryMask, GrayImage, Kernel};
use crate::superpix::{slic_distance2, Center};

/// Correlation with edge replication, one output pixel at a time.
pub fn brute_convolve(img: &GrayImage, k: &Kernel) -> GrayImage {
    let (w, h) = img.dims();
    let (rx, ry) = ((k.width() / 2) as isize, (k.height() / 2) as isize);
    GrayImage::from_fn(w, h, |x, y| {
        let mut acc = 0.0;
        for j in 0..k.height() {
            for i in 0..k.width() {
                let sx = x as isize + i as isize - rx;
                let sy = y as isize + j as isize - ry;
                acc += k.weight(i, j) * img.get_clamped(sx, sy);
            }
        }
        acc
    })
}

/// Mean of `f` over the square window of radius `r` clipped to the frame.
fn window_mean(
    w: usize,
    h: usize,
    x: usize,
    y: usize,
    r: usize,
    f: impl Fn(usize, usize) -> f64,
) -> f64 {
    let (x0, x1) = (x.saturating_sub(r), (x + r).min(w - 1));
    let (y0, y1) = (y.saturating_sub(r), (y + r).min(h - 1));
    let mut sum = 0.0;
    for yy in y0..=y1 {
        for xx in x0..=x1 {
            sum += f(xx, yy);
        }
    }
    sum / ((x1 - x0 + 1) * (y1 - y0 + 1)) as f64
}

/// Guided filter from the windowed linear-model definition.
pub fn brute_guided_filter(
    guide: &GrayImage,
    input: &GrayImage,
    p: GuidedParams,
) -> Result<GrayImage> {
    ensure_same_dims(guide.dims(), input.dims())?;
    let (w, h) = guide.dims();
    let r = p.radius;
    let mut alpha = vec![0.0; w * h];
    let mut beta = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mu = window_mean(w, h, x, y, r, |a, b| guide.get(a, b));
            let qbar = window_mean(w, h, x, y, r, |a, b| input.get(a, b));
            let var = window_mean(w, h, x, y, r, |a, b| (guide.get(a, b) - mu).powi(2));
            let cov = window_mean(w, h, x, y, r, |a, b| {
                (guide.get(a, b) - mu) * (input.get(a, b) - qbar)
            });
            let a = cov / (var + p.eps);
            alpha[y * w + x] = a;
            beta[y * w + x] = qbar - a * mu;
        }
    }
    Ok(GrayImage::from_fn(w, h, |x, y| {
        let ma = window_mean(w, h, x, y, r, |a, b| alpha[b * w + a]);
        let mb = window_mean(w, h, x, y, r, |a, b| beta[b * w + a]);
        ma * guide.get(x, y) + mb
    }))
}

/// Per pixel: the lowest-index center of minimal distance among those whose
/// square region of half-width `search` contains the pixel, or the globally
/// nearest center when none does.
pub fn brute_slic_assign(
    img: &GrayImage,
    centers: &[Center],
    s: f64,
    search: f64,
    m: f64,
) -> Vec<usize> {
    let (w, h) = img.dims();
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let (fx, fy, l) = (x as f64, y as f64, img.get(x, y));
            let covers = |c: &Center| (c.x - fx).abs() <= search && (c.y - fy).abs() <= search;
            let pick = |only_covering: bool| {
                let mut best: Option<(usize, f64)> = None;
                for (i, c) in centers.iter().enumerate() {
                    if only_covering && !covers(c) {
                        continue;
                    }
                    let d = slic_distance2(c, l, fx, fy, s, m);
                    if best.is_none_or(|(_, bd)| d < bd) {
                        best = Some((i, d));
                    }
                }
                best.map(|b| b.0)
            };
            out.push(pick(true).or_else(|| pick(false)).unwrap_or(0));
        }
    }
    out
}

/// Two-of-three vote through an explicit eight-row truth table.
pub fn truth_table_vote(a: &BinaryMask, b: &BinaryMask, c: &BinaryMask) -> Result<BinaryMask> {
    const TABLE: [bool; 8] = [false, false, false, true, false, true, true, true];
    ensure_same_dims(a.dims(), b.dims())?;
    ensure_same_dims(a.dims(), c.dims())?;
    let (w, h) = a.dims();
    Ok(BinaryMask::from_fn(w, h, |x, y| {
        let idx = (a.get(x, y) as usize) << 2 | (b.get(x, y) as usize) << 1 | c.get(x, y) as usize;
        TABLE[idx]
    }))
}
