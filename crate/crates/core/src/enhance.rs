//! Contrast enhancement and edge-preserving smoothing.
//!
//! * [`multiscale_tophat`]: bright top-hat residues are added and dark ones
//!   subtracted, aggregated over disk scales as the per-pixel maximum plus
//!   the maximum difference between consecutive scales.
//! * [`guided_filter`]: box-window guided filter with windows clipped to
//!   the frame.
//! * [`homomorphic`]: log-domain Gaussian high-frequency emphasis.

use crate::error::{Error, Result};
use crate::imgcore::conv::{box_counts, box_sum, gaussian_kernel_1d, separable};
use crate::imgcore::{ensure_same_dims, morph_close, morph_open, DiskSE, GrayImage};

/// Disk radii for the multi-scale top-hat, strictly increasing.
#[derive(Clone, Debug, PartialEq)]
pub struct TopHatScales {
    radii: Vec<usize>,
}

impl TopHatScales {
    pub fn new(radii: Vec<usize>) -> Result<Self> {
        if radii.is_empty() {
            return Err(Error::invalid("top-hat scale list is empty"));
        }
        if radii[0] == 0 || radii.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid(
                "top-hat radii must be positive and strictly increasing",
            ));
        }
        Ok(Self { radii })
    }

    pub fn radii(&self) -> &[usize] {
        &self.radii
    }
}

impl Default for TopHatScales {
    fn default() -> Self {
        Self {
            radii: (3..=19).step_by(2).collect(),
        }
    }
}

/// Per-pixel `max_i r_i + max_i (r_{i+1} - r_i)` over a stack of residues.
fn aggregate(residues: &[GrayImage]) -> Vec<f64> {
    let n = residues[0].len();
    (0..n)
        .map(|p| {
            let peak = residues
                .iter()
                .map(|r| r.data()[p])
                .fold(f64::NEG_INFINITY, f64::max);
            let step = residues
                .windows(2)
                .map(|w| w[1].data()[p] - w[0].data()[p])
                .fold(f64::NEG_INFINITY, f64::max);
            if step.is_finite() {
                peak + step
            } else {
                peak
            }
        })
        .collect()
}

pub fn multiscale_tophat(img: &GrayImage, scales: &TopHatScales) -> GrayImage {
    let mut bright = Vec::with_capacity(scales.radii.len());
    let mut dark = Vec::with_capacity(scales.radii.len());
    for &r in &scales.radii {
        let se = DiskSE::new(r).expect("radii validated");
        let opened = morph_open(img, se);
        let closed = morph_close(img, se);
        bright.push(img.zip_map(&opened, |i, o| i - o).unwrap());
        dark.push(closed.zip_map(img, |c, i| c - i).unwrap());
    }
    let mb = aggregate(&bright);
    let md = aggregate(&dark);
    let out = img
        .data()
        .iter()
        .zip(mb.iter().zip(&md))
        .map(|(&i, (&b, &d))| (i + b - d).clamp(0.0, 1.0))
        .collect();
    GrayImage::from_raw(img.width(), img.height(), out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GuidedParams {
    pub radius: usize,
    pub eps: f64,
}

impl GuidedParams {
    pub fn new(radius: usize, eps: f64) -> Result<Self> {
        if radius == 0 {
            return Err(Error::invalid("guided filter radius must be at least 1"));
        }
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::invalid("guided filter eps must be positive"));
        }
        Ok(Self { radius, eps })
    }
}

impl Default for GuidedParams {
    fn default() -> Self {
        Self {
            radius: 8,
            eps: 0.2,
        }
    }
}

/// Per-window linear coefficients `(alpha_k, beta_k)`, one pair per window
/// centre, before aggregation.
pub fn guided_coefficients(
    guide: &GrayImage,
    input: &GrayImage,
    p: GuidedParams,
) -> Result<(GrayImage, GrayImage)> {
    ensure_same_dims(guide.dims(), input.dims())?;
    let (w, h) = guide.dims();
    let r = p.radius;
    let counts = box_counts(w, h, r);
    let mean = |v: &[f64]| -> Vec<f64> {
        box_sum(v, w, h, r)
            .iter()
            .zip(&counts)
            .map(|(s, c)| s / c)
            .collect()
    };
    let f = guide.data();
    let q = input.data();
    let ff: Vec<f64> = f.iter().map(|v| v * v).collect();
    let fq: Vec<f64> = f.iter().zip(q).map(|(a, b)| a * b).collect();
    let mu = mean(f);
    let qbar = mean(q);
    let mff = mean(&ff);
    let mfq = mean(&fq);
    let mut alpha = Vec::with_capacity(w * h);
    let mut beta = Vec::with_capacity(w * h);
    for i in 0..w * h {
        let var = mff[i] - mu[i] * mu[i];
        let cov = mfq[i] - mu[i] * qbar[i];
        let a = cov / (var + p.eps);
        alpha.push(a);
        beta.push(qbar[i] - a * mu[i]);
    }
    Ok((
        GrayImage::from_raw(w, h, alpha),
        GrayImage::from_raw(w, h, beta),
    ))
}

pub fn guided_filter(guide: &GrayImage, input: &GrayImage, p: GuidedParams) -> Result<GrayImage> {
    let (alpha, beta) = guided_coefficients(guide, input, p)?;
    let (w, h) = guide.dims();
    let counts = box_counts(w, h, p.radius);
    let ma = box_sum(alpha.data(), w, h, p.radius);
    let mb = box_sum(beta.data(), w, h, p.radius);
    let out = guide
        .data()
        .iter()
        .enumerate()
        .map(|(i, &f)| (ma[i] * f + mb[i]) / counts[i])
        .collect();
    Ok(GrayImage::from_raw(w, h, out))
}

/// Smooths the contrast-enhanced frame with the vesselness map as guidance.
pub fn smooth_for_ridges(
    enhanced: &GrayImage,
    vesselness: &GrayImage,
    p: GuidedParams,
) -> Result<GrayImage> {
    guided_filter(vesselness, enhanced, p)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HomomorphicParams {
    /// Gaussian cutoff in cycles per image.
    pub cutoff: f64,
    pub gain_low: f64,
    pub gain_high: f64,
}

impl Default for HomomorphicParams {
    fn default() -> Self {
        Self {
            cutoff: 8.0,
            gain_low: 0.05,
            gain_high: 1.5,
        }
    }
}

/// Homomorphic filtering with transfer
/// `H(f) = gain_low + (gain_high - gain_low) (1 - exp(-f^2 / cutoff^2))`.
///
/// `H` equals `gain_high` minus a scaled Gaussian low-pass, so it is applied
/// in the spatial domain as `gain_high * L - (gain_high - gain_low) * G * L`
/// on `L = ln(max(I, 0) + 1e-3)`, with the Gaussian width matching the
/// cutoff along each axis. The exponentiated result is rescaled to `[0, 1]`;
/// a flat result returns the (clamped) input unchanged.
pub fn homomorphic(img: &GrayImage, p: HomomorphicParams) -> GrayImage {
    let log = img.map(|v| (v.max(0.0) + 1e-3).ln());
    let filtered = if p.gain_low == p.gain_high {
        log.map(|v| v * p.gain_high)
    } else {
        let denom = std::f64::consts::SQRT_2 * std::f64::consts::PI * p.cutoff;
        let sx = img.width() as f64 / denom;
        let sy = img.height() as f64 / denom;
        let low = separable(&log, &gaussian_kernel_1d(sx, 0), &gaussian_kernel_1d(sy, 0));
        log.zip_map(&low, |l, g| {
            p.gain_high * l - (p.gain_high - p.gain_low) * g
        })
        .unwrap()
    };
    let out = filtered.map(f64::exp);
    let (lo, hi) = out.min_max();
    if hi - lo <= 1e-12 * hi.abs().max(1.0) {
        return img.clamp01();
    }
    out.normalized_min_max()
}
