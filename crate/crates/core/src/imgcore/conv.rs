//! Correlation-style 2-D convolution and sampled Gaussian derivative kernels.
//!
//! `convolve` computes `out(x, y) = sum K[j][i] * I(x + i - cx, y + j - cy)`
//! (the kernel is not flipped), with edge replication outside the frame.

use super::GrayImage;
use crate::error::{Error, Result};

/// Dense 2-D kernel with odd dimensions, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel {
    width: usize,
    height: usize,
    weights: Vec<f64>,
}

impl Kernel {
    pub fn new(width: usize, height: usize, weights: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || width.is_multiple_of(2) || height.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "kernel dimensions must be odd, got {width}x{height}"
            )));
        }
        if weights.len() != width * height {
            return Err(Error::invalid(
                "kernel weight count does not match its dimensions",
            ));
        }
        Ok(Self {
            width,
            height,
            weights,
        })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != width) {
            return Err(Error::invalid("kernel rows have different lengths"));
        }
        Self::new(width, height, rows.concat())
    }

    pub fn identity() -> Self {
        Self {
            width: 1,
            height: 1,
            weights: vec![1.0],
        }
    }

    /// Normalized box of side `2 * radius + 1`.
    pub fn box_filter(radius: usize) -> Self {
        let side = 2 * radius + 1;
        let w = 1.0 / (side * side) as f64;
        Self {
            width: side,
            height: side,
            weights: vec![w; side * side],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[j * self.width + i]
    }
}

pub fn convolve(img: &GrayImage, kernel: &Kernel) -> GrayImage {
    let (w, h) = img.dims();
    let cx = (kernel.width / 2) as isize;
    let cy = (kernel.height / 2) as isize;
    let mut out = vec![0.0; w * h];
    let mut padded_rows: Vec<Vec<f64>> = Vec::with_capacity(kernel.height);
    for y in 0..h {
        padded_rows.clear();
        for j in 0..kernel.height {
            let sy = y as isize + j as isize - cy;
            padded_rows.push(
                (0..w + kernel.width - 1)
                    .map(|px| img.get_clamped(px as isize - cx, sy))
                    .collect(),
            );
        }
        let row = &mut out[y * w..(y + 1) * w];
        for (j, src) in padded_rows.iter().enumerate() {
            let krow = &kernel.weights[j * kernel.width..(j + 1) * kernel.width];
            for (x, o) in row.iter_mut().enumerate() {
                let window = &src[x..x + kernel.width];
                *o += krow.iter().zip(window).map(|(k, v)| k * v).sum::<f64>();
            }
        }
    }
    GrayImage::from_raw(w, h, out)
}

/// +1 for an even kernel, -1 for an odd one, 0 otherwise.
fn parity(kernel: &[f64]) -> f64 {
    let n = kernel.len();
    let mirrored = |sign: f64| (0..n / 2).all(|t| kernel[t] == sign * kernel[n - 1 - t]);
    if mirrored(1.0) {
        1.0
    } else if mirrored(-1.0) && kernel[n / 2] == 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `dst += sum_t kernel[t] * src(t)`, pairing mirrored taps when the kernel
/// is even or odd.
fn accumulate<'a>(dst: &mut [f64], kernel: &[f64], src: impl Fn(usize) -> &'a [f64]) {
    let n = kernel.len();
    let sign = parity(kernel);
    if sign == 0.0 {
        for (t, &k) in kernel.iter().enumerate() {
            for (o, &v) in dst.iter_mut().zip(src(t)) {
                *o += k * v;
            }
        }
        return;
    }
    for t in 0..n / 2 {
        let k = kernel[t];
        let (a, b) = (src(t), src(n - 1 - t));
        if sign > 0.0 {
            for ((o, &u), &v) in dst.iter_mut().zip(a).zip(b) {
                *o += k * (u + v);
            }
        } else {
            for ((o, &u), &v) in dst.iter_mut().zip(a).zip(b) {
                *o += k * (u - v);
            }
        }
    }
    let k = kernel[n / 2];
    if k != 0.0 {
        for (o, &v) in dst.iter_mut().zip(src(n / 2)) {
            *o += k * v;
        }
    }
}

/// Horizontal pass of a 1-D odd kernel, edge replication.
pub(crate) fn correlate_rows(img: &GrayImage, kernel: &[f64]) -> GrayImage {
    let (w, h) = img.dims();
    let r = kernel.len() / 2;
    let mut out = vec![0.0; w * h];
    let mut padded = vec![0.0; w + 2 * r];
    for y in 0..h {
        let row = &img.data()[y * w..(y + 1) * w];
        padded[..r].fill(row[0]);
        padded[r..r + w].copy_from_slice(row);
        padded[r + w..].fill(row[w - 1]);
        let dst = &mut out[y * w..(y + 1) * w];
        accumulate(dst, kernel, |t| &padded[t..t + w]);
    }
    GrayImage::from_raw(w, h, out)
}

/// Vertical pass of a 1-D odd kernel, edge replication.
pub(crate) fn correlate_cols(img: &GrayImage, kernel: &[f64]) -> GrayImage {
    let (w, h) = img.dims();
    let r = kernel.len() as isize / 2;
    let src = img.data();
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        let dst = &mut out[y * w..(y + 1) * w];
        accumulate(dst, kernel, |t| {
            let sy = (y as isize + t as isize - r).clamp(0, h as isize - 1) as usize;
            &src[sy * w..(sy + 1) * w]
        });
    }
    GrayImage::from_raw(w, h, out)
}

pub(crate) fn separable(img: &GrayImage, kx: &[f64], ky: &[f64]) -> GrayImage {
    correlate_rows(&correlate_cols(img, ky), kx)
}

/// Truncation radius used by every Gaussian kernel.
pub fn gaussian_radius(sigma: f64) -> usize {
    (4.0 * sigma).ceil() as usize
}

/// Sampled 1-D Gaussian derivative kernel of the given order (0..=2),
/// in correlation orientation, truncated at `ceil(4 sigma)`.
///
/// Order 0 sums to one, order 1 has unit first moment and order 2 is
/// zero-sum with `sum k^2 K[k] / 2 = 1`, so ramps and parabolas are
/// differentiated exactly.
pub fn gaussian_kernel_1d(sigma: f64, order: usize) -> Vec<f64> {
    let r = gaussian_radius(sigma) as isize;
    let s2 = sigma * sigma;
    let g: Vec<f64> = (-r..=r)
        .map(|k| (-(k * k) as f64 / (2.0 * s2)).exp())
        .collect();
    let offsets = || (-r..=r).map(|k| k as f64);
    match order {
        0 => {
            let sum: f64 = g.iter().sum();
            g.iter().map(|v| v / sum).collect()
        }
        1 => {
            let raw: Vec<f64> = offsets().zip(&g).map(|(k, gv)| k * gv).collect();
            let moment: f64 = offsets().zip(&raw).map(|(k, v)| k * v).sum();
            raw.iter().map(|v| v / moment).collect()
        }
        2 => {
            let raw: Vec<f64> = offsets()
                .zip(&g)
                .map(|(k, gv)| (k * k / s2 - 1.0) * gv)
                .collect();
            let mean = raw.iter().sum::<f64>() / raw.len() as f64;
            let centered: Vec<f64> = raw.iter().map(|v| v - mean).collect();
            let moment: f64 = offsets().zip(&centered).map(|(k, v)| k * k * v / 2.0).sum();
            centered.iter().map(|v| v / moment).collect()
        }
        _ => unreachable!("derivative order above 2"),
    }
}

/// `sigma^l` times the `(dx, dy)` Gaussian derivative of `img`.
pub fn gaussian_derivative(
    img: &GrayImage,
    sigma: f64,
    dx: usize,
    dy: usize,
    l: f64,
) -> Result<GrayImage> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    if dx + dy > 2 {
        return Err(Error::invalid(format!(
            "derivative order dx + dy must be at most 2, got {}",
            dx + dy
        )));
    }
    let kx = gaussian_kernel_1d(sigma, dx);
    let ky = gaussian_kernel_1d(sigma, dy);
    let out = separable(img, &kx, &ky);
    let scale = sigma.powf(l);
    Ok(if scale == 1.0 {
        out
    } else {
        out.map(|v| v * scale)
    })
}

pub fn gaussian_blur(img: &GrayImage, sigma: f64) -> Result<GrayImage> {
    gaussian_derivative(img, sigma, 0, 0, 0.0)
}

/// Mean over the `(2r+1)^2` window clipped to the frame, using running sums.
pub fn box_mean(img: &GrayImage, radius: usize) -> GrayImage {
    let (w, h) = img.dims();
    let sums = box_sum(img.data(), w, h, radius);
    let counts = box_counts(w, h, radius);
    GrayImage::from_raw(w, h, sums.iter().zip(&counts).map(|(s, c)| s / c).collect())
}

/// Sum over the clipped window of radius `r` around each pixel.
pub(crate) fn box_sum(data: &[f64], w: usize, h: usize, r: usize) -> Vec<f64> {
    let mut rows = vec![0.0; w * h];
    let mut prefix = vec![0.0; w.max(h) + 1];
    for y in 0..h {
        let src = &data[y * w..(y + 1) * w];
        for x in 0..w {
            prefix[x + 1] = prefix[x] + src[x];
        }
        for x in 0..w {
            let lo = x.saturating_sub(r);
            let hi = (x + r).min(w - 1);
            rows[y * w + x] = prefix[hi + 1] - prefix[lo];
        }
    }
    let mut out = vec![0.0; w * h];
    for x in 0..w {
        for y in 0..h {
            prefix[y + 1] = prefix[y] + rows[y * w + x];
        }
        for y in 0..h {
            let lo = y.saturating_sub(r);
            let hi = (y + r).min(h - 1);
            out[y * w + x] = prefix[hi + 1] - prefix[lo];
        }
    }
    out
}

pub(crate) fn box_counts(w: usize, h: usize, r: usize) -> Vec<f64> {
    let span = |i: usize, n: usize| ((i + r).min(n - 1) - i.saturating_sub(r) + 1) as f64;
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        let sy = span(y, h);
        for x in 0..w {
            out.push(sy * span(x, w));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(w: usize, h: usize) -> GrayImage {
        GrayImage::from_fn(w, h, |x, _| x as f64)
    }

    #[test]
    fn identity_kernel_is_noop() {
        let img = GrayImage::from_fn(7, 5, |x, y| (x * 3 + y * 11) as f64 * 0.01);
        assert_eq!(convolve(&img, &Kernel::identity()), img);
    }

    #[test]
    fn box_kernel_preserves_constant() {
        let img = GrayImage::filled(9, 9, 0.37);
        let out = convolve(&img, &Kernel::box_filter(2));
        assert!(out.data().iter().all(|v| (v - 0.37).abs() < 1e-12));
    }

    #[test]
    fn even_kernel_rejected() {
        assert!(Kernel::new(2, 3, vec![0.0; 6]).is_err());
        assert!(Kernel::from_rows(&[&[1.0, 1.0], &[1.0, 1.0]]).is_err());
    }

    #[test]
    fn sobel_on_ramp_matches_direct_sum() {
        let sobel =
            Kernel::from_rows(&[&[-1.0, 0.0, 1.0], &[-2.0, 0.0, 2.0], &[-1.0, 0.0, 1.0]]).unwrap();
        let img = ramp(10, 8);
        let out = convolve(&img, &sobel);
        // direct per-pixel summation at an interior pixel
        let (x, y) = (4isize, 3isize);
        let mut direct = 0.0;
        for j in 0..3isize {
            for i in 0..3isize {
                direct +=
                    sobel.weight(i as usize, j as usize) * img.get_clamped(x + i - 1, y + j - 1);
            }
        }
        assert_eq!(direct, 8.0);
        assert_eq!(out.get(4, 3), 8.0);
    }

    #[test]
    fn first_derivative_of_constant_is_zero() {
        let img = GrayImage::filled(20, 20, 0.6);
        let d = gaussian_derivative(&img, 2.0, 1, 0, 1.0).unwrap();
        assert!(d.data().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn ramp_derivative_is_sigma_normalized() {
        let img = ramp(64, 32);
        for sigma in [0.7, 1.0, 2.5, 4.0] {
            let d = gaussian_derivative(&img, sigma, 1, 0, 1.0).unwrap();
            assert!(
                (d.get(32, 16) - sigma).abs() < 1e-3,
                "sigma {sigma}: {}",
                d.get(32, 16)
            );
        }
    }

    #[test]
    fn second_derivative_negative_at_bright_blob_peak() {
        let s0 = 3.0;
        let img = GrayImage::from_fn(41, 41, |x, y| {
            let dx = x as f64 - 20.0;
            let dy = y as f64 - 20.0;
            (-(dx * dx + dy * dy) / (2.0 * s0 * s0)).exp()
        });
        let d = gaussian_derivative(&img, 2.0, 2, 0, 1.0).unwrap();
        assert!(d.get(20, 20) < 0.0);
    }

    #[test]
    fn invalid_sigma_and_order() {
        let img = GrayImage::filled(4, 4, 0.0);
        assert!(gaussian_derivative(&img, 0.0, 0, 0, 1.0).is_err());
        assert!(gaussian_derivative(&img, -1.0, 0, 0, 1.0).is_err());
        assert!(gaussian_derivative(&img, 1.0, 2, 1, 1.0).is_err());
    }

    #[test]
    fn smoothing_preserves_constant() {
        let img = GrayImage::filled(16, 16, 0.25);
        let out = gaussian_derivative(&img, 1.5, 0, 0, 0.0).unwrap();
        assert!(out.data().iter().all(|v| (v - 0.25).abs() < 1e-12));
    }

    #[test]
    fn box_mean_clips_at_border() {
        let img = GrayImage::from_fn(3, 1, |x, _| x as f64);
        let m = box_mean(&img, 1);
        assert_eq!(m.data(), &[0.5, 1.0, 1.5]);
    }
}
