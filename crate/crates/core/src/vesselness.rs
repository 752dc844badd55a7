//! Hessian-based vesselness.
//!
//! Eigenvalues are ordered `|l1| <= |l2|`. A dark tube on a bright
//! background has a large positive `l2` across the tube, so the measure is
//! zero wherever `l2 < 0` and the input keeps its original polarity.
//!
//! The directional variant splits the frame into orientation bands with
//! frequency-domain wedge filters, applies homomorphic correction to every
//! band, evaluates the multi-scale measure on the rotated Hessian of each
//! band and averages the bands.

use crate::enhance::HomomorphicParams;
use crate::error::{Error, Result};
use crate::imgcore::conv::{gaussian_kernel_1d, separable};
use crate::imgcore::spectral::{bin_freq, crop, mirror_pad, Fft2};
use crate::imgcore::GrayImage;
use rustfft::num_complex::Complex64;

/// Second-derivative responses at one scale. Symmetric by construction.
#[derive(Clone, Debug, PartialEq)]
pub struct HessianField {
    pub ixx: GrayImage,
    pub ixy: GrayImage,
    pub iyy: GrayImage,
}

impl HessianField {
    pub fn eigenvalues(&self, x: usize, y: usize) -> (f64, f64) {
        eigen2x2(self.ixx.get(x, y), self.ixy.get(x, y), self.iyy.get(x, y))
    }
}

/// Scale-normalized (`sigma^1`) Gaussian second derivatives.
pub fn hessian_at(img: &GrayImage, sigma: f64) -> Result<HessianField> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    let k0 = gaussian_kernel_1d(sigma, 0);
    let k1 = gaussian_kernel_1d(sigma, 1);
    let k2 = gaussian_kernel_1d(sigma, 2);
    let scale = |g: GrayImage| g.map(|v| v * sigma);
    Ok(HessianField {
        ixx: scale(separable(img, &k2, &k0)),
        ixy: scale(separable(img, &k1, &k1)),
        iyy: scale(separable(img, &k0, &k2)),
    })
}

/// Closed-form eigenvalues of `[[ixx, ixy], [ixy, iyy]]`, ordered by
/// absolute value.
#[inline]
pub fn eigen2x2(ixx: f64, ixy: f64, iyy: f64) -> (f64, f64) {
    let half_trace = 0.5 * (ixx + iyy);
    let disc = (0.25 * (ixx - iyy) * (ixx - iyy) + ixy * ixy).sqrt();
    let a = half_trace + disc;
    let b = half_trace - disc;
    if a.abs() <= b.abs() {
        (a, b)
    } else {
        (b, a)
    }
}

/// Unit eigenvector of the symmetric matrix for eigenvalue `lambda`.
pub fn eigenvector(ixx: f64, ixy: f64, iyy: f64, lambda: f64) -> (f64, f64) {
    let (ax, ay) = (ixy, lambda - ixx);
    let (bx, by) = (lambda - iyy, ixy);
    let na = ax * ax + ay * ay;
    let nb = bx * bx + by * by;
    let (vx, vy, n) = if na >= nb { (ax, ay, na) } else { (bx, by, nb) };
    if n <= f64::MIN_POSITIVE {
        return (1.0, 0.0);
    }
    let n = n.sqrt();
    (vx / n, vy / n)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrangiParams {
    pub sigmas: Vec<f64>,
    pub beta: f64,
    pub c: f64,
}

impl FrangiParams {
    pub fn new(sigmas: Vec<f64>, beta: f64, c: f64) -> Result<Self> {
        if sigmas.is_empty() {
            return Err(Error::invalid("frangi scale list is empty"));
        }
        if sigmas.iter().any(|s| !(*s > 0.0)) || sigmas.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid(
                "frangi scales must be positive and increasing",
            ));
        }
        if !(beta > 0.0) || !(c > 0.0) {
            return Err(Error::invalid("frangi beta and c must be positive"));
        }
        Ok(Self { sigmas, beta, c })
    }
}

impl Default for FrangiParams {
    fn default() -> Self {
        Self {
            sigmas: vec![1.0, 2.0, 3.0, 4.0, 6.0, 8.0],
            beta: 0.5,
            c: 0.08,
        }
    }
}

/// Single-scale vesselness from ordered eigenvalues.
#[inline]
pub fn vesselness_response(l1: f64, l2: f64, beta: f64, c: f64) -> f64 {
    if l2 <= 0.0 {
        return 0.0;
    }
    let rb = l1 / l2;
    let s2 = l1 * l1 + l2 * l2;
    (-(rb * rb) / (2.0 * beta * beta)).exp() * (1.0 - (-s2 / (2.0 * c * c)).exp())
}

fn field_response(h: &HessianField, p: &FrangiParams) -> Vec<f64> {
    h.ixx
        .data()
        .iter()
        .zip(h.ixy.data())
        .zip(h.iyy.data())
        .map(|((&xx, &xy), &yy)| {
            let (l1, l2) = eigen2x2(xx, xy, yy);
            vesselness_response(l1, l2, p.beta, p.c)
        })
        .collect()
}

/// Multi-scale vesselness plus the index of the winning scale per pixel.
pub fn frangi_with_scales(img: &GrayImage, p: &FrangiParams) -> Result<(GrayImage, Vec<usize>)> {
    let n = img.len();
    let mut best = vec![0.0; n];
    let mut arg = vec![0usize; n];
    for (si, &sigma) in p.sigmas.iter().enumerate() {
        let h = hessian_at(img, sigma)?;
        for (i, v) in field_response(&h, p).into_iter().enumerate() {
            if v > best[i] {
                best[i] = v;
                arg[i] = si;
            }
        }
    }
    Ok((GrayImage::from_raw(img.width(), img.height(), best), arg))
}

pub fn frangi(img: &GrayImage, p: &FrangiParams) -> Result<GrayImage> {
    frangi_with_scales(img, p).map(|(v, _)| v)
}

/// Expresses the Hessian in coordinates rotated by `theta` (radians):
/// `H' = R H R^T` with `R = [[cos, sin], [-sin, cos]]`.
pub fn rotate_hessian(h: &HessianField, theta: f64) -> HessianField {
    let (s, c) = theta.sin_cos();
    let (c2, s2, sin2, cos2) = (c * c, s * s, (2.0 * theta).sin(), (2.0 * theta).cos());
    let n = h.ixx.len();
    let mut xx = Vec::with_capacity(n);
    let mut yy = Vec::with_capacity(n);
    let mut xy = Vec::with_capacity(n);
    for i in 0..n {
        let (a, b, d) = (h.ixx.data()[i], h.ixy.data()[i], h.iyy.data()[i]);
        xx.push(a * c2 + b * sin2 + d * s2);
        yy.push(a * s2 - b * sin2 + d * c2);
        xy.push(-0.5 * a * sin2 + b * cos2 + 0.5 * d * sin2);
    }
    let (w, hgt) = h.ixx.dims();
    HessianField {
        ixx: GrayImage::from_raw(w, hgt, xx),
        ixy: GrayImage::from_raw(w, hgt, xy),
        iyy: GrayImage::from_raw(w, hgt, yy),
    }
}

/// Equal-width orientation bands partitioning `[0, 180)` degrees.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DirectionalBank {
    n_bands: usize,
}

impl DirectionalBank {
    pub fn new(n_bands: usize) -> Result<Self> {
        if n_bands == 0 {
            return Err(Error::invalid("directional bank needs at least one band"));
        }
        Ok(Self { n_bands })
    }

    pub fn n_bands(&self) -> usize {
        self.n_bands
    }

    pub fn band_width_deg(&self) -> f64 {
        180.0 / self.n_bands as f64
    }

    /// `(min, max)` structure orientation of band `i`, degrees.
    pub fn wedge(&self, i: usize) -> (f64, f64) {
        let w = self.band_width_deg();
        (i as f64 * w, (i + 1) as f64 * w)
    }

    /// Band orientation, the midpoint of its wedge, degrees.
    pub fn theta(&self, i: usize) -> f64 {
        let (lo, hi) = self.wedge(i);
        (lo + hi) / 2.0
    }

    /// Angular weight of a structure with orientation `orient_deg` in band
    /// `i`. Adjacent bands overlap with cosine tapers whose squares sum to
    /// one, so a structure keeps the same total band energy whatever its
    /// orientation.
    pub fn weight(&self, i: usize, orient_deg: f64) -> f64 {
        let w = self.band_width_deg();
        let d = (orient_deg - self.theta(i)).rem_euclid(180.0);
        let d = d.min(180.0 - d);
        if d >= w {
            0.0
        } else {
            (std::f64::consts::FRAC_PI_2 * d / w).cos()
        }
    }
}

impl Default for DirectionalBank {
    fn default() -> Self {
        Self { n_bands: 8 }
    }
}

/// Splits `img` into one directional image per band.
///
/// A structure oriented at angle `a` concentrates its spectrum along
/// `a + 90` degrees, which selects the band weight of each frequency bin.
/// The DC term is kept in every band.
pub fn directional_decompose(img: &GrayImage, bank: &DirectionalBank) -> Vec<GrayImage> {
    let (w, h) = img.dims();
    let pad = (w.max(h) / 16).max(8);
    let padded = mirror_pad(img, pad);
    let (pw, ph) = (padded.width, padded.height);
    let fft = Fft2::new(pw, ph);
    let mut spectrum = padded.data;
    fft.forward(&mut spectrum);

    let orient: Vec<Option<f64>> = (0..ph)
        .flat_map(|v| {
            (0..pw).map(move |u| {
                let fu = bin_freq(u, pw);
                let fv = bin_freq(v, ph);
                if fu == 0.0 && fv == 0.0 {
                    None
                } else {
                    Some(fv.atan2(fu).to_degrees() + 90.0)
                }
            })
        })
        .collect();
    let band_weights = |i: usize| -> Vec<f64> {
        orient
            .iter()
            .map(|o| o.map_or(1.0, |deg| bank.weight(i, deg)))
            .collect()
    };

    let n = bank.n_bands();
    let mut bands = Vec::with_capacity(n);
    let mut i = 0;
    while i < n {
        // two real bands per inverse transform: real and imaginary parts
        let wa = band_weights(i);
        let wb = if i + 1 < n {
            Some(band_weights(i + 1))
        } else {
            None
        };
        let mut buf: Vec<Complex64> = spectrum
            .iter()
            .enumerate()
            .map(|(k, s)| {
                let b = wb.as_ref().map_or(0.0, |wb| wb[k]);
                s * Complex64::new(wa[k], 0.0) + s * Complex64::new(0.0, b)
            })
            .collect();
        fft.inverse(&mut buf);
        bands.push(crop(&buf, pw, padded.pad, w, h, false));
        if wb.is_some() {
            bands.push(crop(&buf, pw, padded.pad, w, h, true));
        }
        i += 2;
    }
    bands
}

/// Homomorphic correction of every band with one shared rescale to `[0, 1]`.
fn homomorphic_bands(bands: &[GrayImage], p: HomomorphicParams) -> Vec<GrayImage> {
    let raw: Vec<GrayImage> = bands.iter().map(|b| homomorphic_unscaled(b, p)).collect();
    let (lo, hi) = raw
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), b| {
            let (l, h) = b.min_max();
            (lo.min(l), hi.max(h))
        });
    let span = hi - lo;
    if span <= 1e-12 * hi.abs().max(1.0) {
        return raw
            .iter()
            .map(|b| GrayImage::filled(b.width(), b.height(), 0.0))
            .collect();
    }
    raw.iter().map(|b| b.map(|v| (v - lo) / span)).collect()
}

fn homomorphic_unscaled(img: &GrayImage, p: HomomorphicParams) -> GrayImage {
    let log = img.map(|v| (v.max(0.0) + 1e-3).ln());
    if p.gain_low == p.gain_high {
        return log.map(|v| (v * p.gain_high).exp());
    }
    let denom = std::f64::consts::SQRT_2 * std::f64::consts::PI * p.cutoff;
    let sx = img.width() as f64 / denom;
    let sy = img.height() as f64 / denom;
    let low = separable(&log, &gaussian_kernel_1d(sx, 0), &gaussian_kernel_1d(sy, 0));
    log.zip_map(&low, |l, g| {
        (p.gain_high * l - (p.gain_high - p.gain_low) * g).exp()
    })
    .unwrap()
}

pub fn directional_vesselness(
    img: &GrayImage,
    bank: &DirectionalBank,
    p: &FrangiParams,
    homomorphic: HomomorphicParams,
) -> Result<GrayImage> {
    let bands = homomorphic_bands(&directional_decompose(img, bank), homomorphic);
    let n = img.len();
    let mut sum = vec![0.0; n];
    for (i, band) in bands.iter().enumerate() {
        let theta = bank.theta(i).to_radians();
        let mut best = vec![0.0f64; n];
        for &sigma in &p.sigmas {
            let h = rotate_hessian(&hessian_at(band, sigma)?, theta);
            for (b, v) in best.iter_mut().zip(field_response(&h, p)) {
                *b = b.max(v);
            }
        }
        for (s, b) in sum.iter_mut().zip(&best) {
            *s += b;
        }
    }
    let avg = GrayImage::from_raw(
        img.width(),
        img.height(),
        sum.into_iter().map(|s| s / bands.len() as f64).collect(),
    );
    Ok(avg.normalized_by_max())
}
