//! Valley response and thresholded ridge maps.
//!
//! The valley response is the positive part of the larger-magnitude
//! Hessian eigenvalue of the original-polarity image, divided by its frame
//! maximum. Ridges are valley pixels above a threshold that are also local
//! maxima of the response across the valley.

use crate::error::{Error, Result};
use crate::imgcore::{BinaryMask, GrayImage};
use crate::vesselness::{eigen2x2, eigenvector, hessian_at};

#[derive(Clone, Debug, PartialEq)]
pub struct ValleyResponse {
    pub response: GrayImage,
    /// Cross-valley direction per pixel, radians in `[0, pi)`.
    pub direction: Vec<f64>,
}

pub fn valley_response(smoothed: &GrayImage, sigma: f64) -> Result<ValleyResponse> {
    let h = hessian_at(smoothed, sigma)?;
    let n = smoothed.len();
    let mut response = Vec::with_capacity(n);
    let mut direction = Vec::with_capacity(n);
    for i in 0..n {
        let (xx, xy, yy) = (h.ixx.data()[i], h.ixy.data()[i], h.iyy.data()[i]);
        let (_, l2) = eigen2x2(xx, xy, yy);
        let (vx, vy) = eigenvector(xx, xy, yy, l2);
        response.push(l2.max(0.0));
        direction.push(vy.atan2(vx).rem_euclid(std::f64::consts::PI));
    }
    let response =
        GrayImage::from_raw(smoothed.width(), smoothed.height(), response).normalized_by_max();
    Ok(ValleyResponse {
        response,
        direction,
    })
}

fn bilinear(img: &GrayImage, x: f64, y: f64) -> f64 {
    let (w, h) = img.dims();
    let x = x.clamp(0.0, (w - 1) as f64);
    let y = y.clamp(0.0, (h - 1) as f64);
    let x0 = x.floor() as usize;
    let y0 = y.floor() as usize;
    let x1 = (x0 + 1).min(w - 1);
    let y1 = (y0 + 1).min(h - 1);
    let fx = x - x0 as f64;
    let fy = y - y0 as f64;
    let top = img.get(x0, y0) * (1.0 - fx) + img.get(x1, y0) * fx;
    let bottom = img.get(x0, y1) * (1.0 - fx) + img.get(x1, y1) * fx;
    top * (1.0 - fy) + bottom * fy
}

/// Non-maximum suppression across the valley; independent of any threshold.
pub fn ridge_candidates(v: &ValleyResponse) -> BinaryMask {
    let r = &v.response;
    let (w, h) = r.dims();
    BinaryMask::from_fn(w, h, |x, y| {
        let c = r.get(x, y);
        if c <= 0.0 {
            return false;
        }
        let (s, co) = v.direction[y * w + x].sin_cos();
        let (fx, fy) = (x as f64, y as f64);
        let ahead = bilinear(r, fx + co, fy + s);
        let behind = bilinear(r, fx - co, fy - s);
        c >= ahead && c > behind
    })
}

pub fn extract_ridges(v: &ValleyResponse, mu_v: f64) -> Result<BinaryMask> {
    if !(mu_v > 0.0 && mu_v <= 1.0) {
        return Err(Error::invalid(format!(
            "ridge threshold must be in (0, 1], got {mu_v}"
        )));
    }
    let thresholded = BinaryMask::threshold(&v.response, mu_v);
    thresholded.and(&ridge_candidates(v))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RidgeParams {
    pub sigma: f64,
    pub t_low: f64,
    pub t_medium: f64,
    pub t_high: f64,
}

impl Default for RidgeParams {
    fn default() -> Self {
        Self {
            sigma: 2.0,
            t_low: 0.2,
            t_medium: 0.25,
            t_high: 0.4,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RidgeMaps {
    pub low: BinaryMask,
    pub medium: BinaryMask,
    pub high: BinaryMask,
}

pub fn ridge_maps(smoothed: &GrayImage, p: &RidgeParams) -> Result<RidgeMaps> {
    let v = valley_response(smoothed, p.sigma)?;
    let candidates = ridge_candidates(&v);
    let at = |t: f64| -> Result<BinaryMask> {
        if !(t > 0.0 && t <= 1.0) {
            return Err(Error::invalid(format!(
                "ridge threshold must be in (0, 1], got {t}"
            )));
        }
        BinaryMask::threshold(&v.response, t).and(&candidates)
    };
    Ok(RidgeMaps {
        low: at(p.t_low)?,
        medium: at(p.t_medium)?,
        high: at(p.t_high)?,
    })
}
