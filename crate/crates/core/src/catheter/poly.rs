//! Quadratic curve model and its least-squares fit.

use crate::error::{Error, Result};
use crate::imgcore::raster_line;

/// Which image coordinate is the independent variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    /// `y = a x^2 + b x + c`
    X,
    /// `x = a y^2 + b y + c`
    Y,
}

/// Quadratic curve over a bounded range of its independent coordinate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Poly2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub axis: Axis,
    /// Inclusive range of the independent coordinate the curve spans.
    pub domain: (f64, f64),
}

impl Poly2 {
    pub fn new(a: f64, b: f64, c: f64, axis: Axis, domain: (f64, f64)) -> Result<Self> {
        if ![a, b, c, domain.0, domain.1].iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("curve coefficients must be finite"));
        }
        if domain.0 > domain.1 {
            return Err(Error::invalid("curve domain is reversed"));
        }
        Ok(Self {
            a,
            b,
            c,
            axis,
            domain,
        })
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        (self.a * t + self.b) * t + self.c
    }

    #[inline]
    pub fn slope(&self, t: f64) -> f64 {
        2.0 * self.a * t + self.b
    }

    /// Image point `(x, y)` at parameter `t`.
    #[inline]
    pub fn point(&self, t: f64) -> (f64, f64) {
        match self.axis {
            Axis::X => (t, self.eval(t)),
            Axis::Y => (self.eval(t), t),
        }
    }

    pub fn with_coefficients(&self, a: f64, b: f64, c: f64) -> Self {
        Self { a, b, c, ..*self }
    }

    /// Points spaced one pixel of arc length apart, both domain ends included.
    pub fn arc_samples(&self) -> Vec<(f64, f64)> {
        let (lo, hi) = self.domain;
        let mut out = Vec::new();
        let mut t = lo;
        while t < hi {
            out.push(self.point(t));
            let s = self.slope(t);
            t += 1.0 / (1.0 + s * s).sqrt();
        }
        out.push(self.point(hi));
        out
    }

    pub fn arc_length(&self) -> f64 {
        // Closed form of the integral of sqrt(1 + (2at + b)^2).
        let prim = |t: f64| {
            let u = self.slope(t);
            let r = (1.0 + u * u).sqrt();
            0.5 * (u * r + (u + r).ln())
        };
        let (lo, hi) = self.domain;
        if self.a.abs() < 1e-12 {
            return (hi - lo) * (1.0 + self.b * self.b).sqrt();
        }
        (prim(hi) - prim(lo)) / (2.0 * self.a)
    }

    /// 8-connected pixel trace of the curve, clipped to a `width x height`
    /// frame, without duplicates, in order along the curve.
    pub fn raster(&self, width: usize, height: usize) -> Vec<(usize, usize)> {
        let mut seen = vec![false; width * height];
        let mut out = Vec::new();
        let mut prev: Option<(isize, isize)> = None;
        for (x, y) in self.arc_samples() {
            // Far-off samples cannot reach the frame; skip before rounding.
            if x.abs() > 1e7 || y.abs() > 1e7 {
                prev = None;
                continue;
            }
            let p = (x.round() as isize, y.round() as isize);
            let run = match prev {
                Some(q) => raster_line(q, p),
                None => vec![p],
            };
            for (px, py) in run {
                if px >= 0 && py >= 0 && (px as usize) < width && (py as usize) < height {
                    let i = py as usize * width + px as usize;
                    if !seen[i] {
                        seen[i] = true;
                        out.push((px as usize, py as usize));
                    }
                }
            }
            prev = Some(p);
        }
        out
    }
}

/// Least-squares quadratic through `points`, parameterized along whichever
/// coordinate has the larger spread.
pub fn fit_poly2(points: &[(f64, f64)]) -> Result<Poly2> {
    if points.len() < 3 {
        return Err(Error::FitFailed(format!(
            "need at least 3 points, got {}",
            points.len()
        )));
    }
    let spread = |f: fn(&(f64, f64)) -> f64| {
        let (lo, hi) = points
            .iter()
            .map(f)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| {
                (l.min(v), h.max(v))
            });
        hi - lo
    };
    let axis = if spread(|p| p.0) >= spread(|p| p.1) {
        Axis::X
    } else {
        Axis::Y
    };
    fit_poly2_along(points, axis)
}

/// Least-squares quadratic with a fixed independent coordinate.
pub fn fit_poly2_along(points: &[(f64, f64)], axis: Axis) -> Result<Poly2> {
    if points.len() < 3 {
        return Err(Error::FitFailed(format!(
            "need at least 3 points, got {}",
            points.len()
        )));
    }
    let tv: Vec<(f64, f64)> = points
        .iter()
        .map(|&(x, y)| match axis {
            Axis::X => (x, y),
            Axis::Y => (y, x),
        })
        .collect();
    let n = tv.len() as f64;
    let lo = tv.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = tv.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    // Centre and scale the parameter to keep the normal equations well conditioned.
    let m = tv.iter().map(|p| p.0).sum::<f64>() / n;
    let s = tv.iter().map(|p| (p.0 - m).abs()).fold(0.0, f64::max);
    if s == 0.0 {
        return Err(Error::FitFailed(
            "all points share one parameter value".into(),
        ));
    }
    let mut ata = [[0.0; 3]; 3];
    let mut atb = [0.0; 3];
    for &(t, v) in &tv {
        let u = (t - m) / s;
        let row = [u * u, u, 1.0];
        for i in 0..3 {
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
            atb[i] += row[i] * v;
        }
    }
    let [qa, qb, qc] = solve3(ata, atb)
        .ok_or_else(|| Error::FitFailed("fewer than 3 distinct parameter values".into()))?;
    let a = qa / (s * s);
    let b = qb / s - 2.0 * qa * m / (s * s);
    let c = qa * m * m / (s * s) - qb * m / s + qc;
    Poly2::new(a, b, c, axis, (lo, hi)).map_err(|e| Error::FitFailed(e.to_string()))
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() <= 1e-12 * scale {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..3 {
            let f = a[r][col] / a[col][col];
            for k in col..3 {
                a[r][k] -= f * a[col][k];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for r in (0..3).rev() {
        let acc: f64 = (r + 1..3).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - acc) / a[r][r];
    }
    Some(x)
}
