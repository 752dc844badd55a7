//! 2-D FFT over row-major complex buffers plus mirror padding helpers.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::GrayImage;

pub(crate) struct Fft2 {
    width: usize,
    height: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn new(width: usize, height: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            width,
            height,
            row_fwd: planner.plan_fft_forward(width),
            row_inv: planner.plan_fft_inverse(width),
            col_fwd: planner.plan_fft_forward(height),
            col_inv: planner.plan_fft_inverse(height),
        }
    }

    fn run(&self, data: &mut [Complex64], rows: &dyn Fft<f64>, cols: &dyn Fft<f64>) {
        let (w, h) = (self.width, self.height);
        debug_assert_eq!(data.len(), w * h);
        rows.process(data);
        let mut t = transpose(data, w, h);
        cols.process(&mut t);
        let back = transpose(&t, h, w);
        data.copy_from_slice(&back);
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(data, self.row_fwd.as_ref(), self.col_fwd.as_ref());
    }

    /// Inverse transform including the `1 / (w h)` normalization.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, self.row_inv.as_ref(), self.col_inv.as_ref());
        let scale = 1.0 / (self.width * self.height) as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }
}

fn transpose(data: &[Complex64], w: usize, h: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); w * h];
    for y in 0..h {
        for x in 0..w {
            out[x * h + y] = data[y * w + x];
        }
    }
    out
}

/// Signed frequency of bin `i` in cycles per sample.
#[inline]
pub(crate) fn bin_freq(i: usize, n: usize) -> f64 {
    let k = if i <= n / 2 {
        i as isize
    } else {
        i as isize - n as isize
    };
    k as f64 / n as f64
}

/// Mirror index into `[0, n)` without repeating the edge sample.
fn reflect(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let m = i.rem_euclid(period);
    if m < n as isize {
        m as usize
    } else {
        (period - m) as usize
    }
}

/// Image embedded in a mirror-padded complex buffer.
pub(crate) struct Padded {
    pub width: usize,
    pub height: usize,
    pub pad: usize,
    pub data: Vec<Complex64>,
}

pub(crate) fn mirror_pad(img: &GrayImage, pad: usize) -> Padded {
    let (w, h) = img.dims();
    let pw = w + 2 * pad;
    let ph = h + 2 * pad;
    let mut data = Vec::with_capacity(pw * ph);
    for y in 0..ph {
        let sy = reflect(y as isize - pad as isize, h);
        for x in 0..pw {
            let sx = reflect(x as isize - pad as isize, w);
            data.push(Complex64::new(img.get(sx, sy), 0.0));
        }
    }
    Padded {
        width: pw,
        height: ph,
        pad,
        data,
    }
}

/// Crops the original frame back out of a padded buffer, taking the real
/// part (`imag == false`) or the imaginary part.
pub(crate) fn crop(
    data: &[Complex64],
    padded_width: usize,
    pad: usize,
    w: usize,
    h: usize,
    imag: bool,
) -> GrayImage {
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        let row = &data[(y + pad) * padded_width + pad..(y + pad) * padded_width + pad + w];
        out.extend(row.iter().map(|c| if imag { c.im } else { c.re }));
    }
    GrayImage::from_raw(w, h, out)
}
