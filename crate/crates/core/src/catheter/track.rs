//! Frame-to-frame catheter tracking by exhaustive search around the
//! previous curve.

use super::poly::{fit_poly2_along, Poly2};
use crate::error::{Error, Result};
use crate::imgcore::BinaryMask;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrackParams {
    /// Half-widths `(da, db, dc)` of the coefficient search box.
    pub search_window: (f64, f64, f64),
    /// Number of grid values per coefficient.
    pub grid: (usize, usize, usize),
    /// Distance from a ridge pixel within which a curve sample counts.
    pub tolerance: f64,
    pub min_support: usize,
    /// Inlier re-fits applied to the grid winner.
    pub refine_iterations: usize,
}

impl Default for TrackParams {
    fn default() -> Self {
        Self {
            search_window: (5e-4, 0.1, 10.0),
            grid: (11, 11, 21),
            tolerance: 1.0,
            min_support: 30,
            refine_iterations: 3,
        }
    }
}

impl TrackParams {
    pub fn validate(&self) -> Result<()> {
        let (da, db, dc) = self.search_window;
        if !(da > 0.0 && db > 0.0 && dc > 0.0) {
            return Err(Error::invalid("search window half-widths must be positive"));
        }
        if self.grid.0 == 0 || self.grid.1 == 0 || self.grid.2 == 0 {
            return Err(Error::invalid(
                "search grid needs at least one value per axis",
            ));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::invalid("tracking tolerance must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrackState {
    pub poly: Poly2,
    pub frame_index: usize,
    pub search_window: (f64, f64, f64),
    /// Curve samples lying within tolerance of a ridge pixel.
    pub fit_support: usize,
    /// The frame's curve was carried over because support was too low.
    pub lost: bool,
}

/// Whether some set pixel lies within `tol` of the real point `(x, y)`.
fn near_ridge(ridge: &BinaryMask, x: f64, y: f64, tol: f64) -> bool {
    let (w, h) = ridge.dims();
    if !(x > -tol - 1.0 && y > -tol - 1.0 && x < w as f64 + tol && y < h as f64 + tol) {
        return false;
    }
    let t2 = tol * tol;
    let x0 = (x - tol).ceil().max(0.0) as usize;
    let y0 = (y - tol).ceil().max(0.0) as usize;
    let x1 = ((x + tol).floor() as isize).min(w as isize - 1);
    let y1 = ((y + tol).floor() as isize).min(h as isize - 1);
    if x1 < 0 || y1 < 0 {
        return false;
    }
    for py in y0..=y1 as usize {
        for px in x0..=x1 as usize {
            let dx = px as f64 - x;
            let dy = py as f64 - y;
            if dx * dx + dy * dy <= t2 && ridge.get(px, py) {
                return true;
            }
        }
    }
    false
}

/// Number of unit-arc curve samples within `tol` of a ridge pixel.
pub fn support(poly: &Poly2, ridge: &BinaryMask, tol: f64) -> usize {
    poly.arc_samples()
        .into_iter()
        .filter(|&(x, y)| near_ridge(ridge, x, y, tol))
        .count()
}

fn grid_values(center: f64, half: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![center];
    }
    (0..n)
        .map(|i| center - half + 2.0 * half * i as f64 / (n - 1) as f64)
        .collect()
}

/// Exhaustive search of the coefficient box around `prev`. Ties go to the
/// lexicographically smallest `(a, b, c)`.
pub fn grid_search(prev: &Poly2, ridge: &BinaryMask, p: &TrackParams) -> (Poly2, usize) {
    let (da, db, dc) = p.search_window;
    let mut best = (*prev, 0usize);
    let mut first = true;
    for &a in &grid_values(prev.a, da, p.grid.0) {
        for &b in &grid_values(prev.b, db, p.grid.1) {
            for &c in &grid_values(prev.c, dc, p.grid.2) {
                let cand = prev.with_coefficients(a, b, c);
                let n = support(&cand, ridge, p.tolerance);
                if first || n > best.1 {
                    best = (cand, n);
                    first = false;
                }
            }
        }
    }
    best
}

fn inliers(poly: &Poly2, ridge: &BinaryMask, tol: f64) -> Vec<(f64, f64)> {
    let (w, h) = ridge.dims();
    let mut seen = vec![false; w * h];
    let mut out = Vec::new();
    let r = tol.ceil() as isize;
    for (x, y) in poly.arc_samples() {
        if x.abs() > 1e7 || y.abs() > 1e7 {
            continue;
        }
        let (cx, cy) = (x.round() as isize, y.round() as isize);
        for py in cy - r..=cy + r {
            for px in cx - r..=cx + r {
                if !ridge.get_signed(px, py) {
                    continue;
                }
                let i = py as usize * w + px as usize;
                let d2 = (px as f64 - x).powi(2) + (py as f64 - y).powi(2);
                if !seen[i] && d2 <= tol * tol {
                    seen[i] = true;
                    out.push((px as f64, py as f64));
                }
            }
        }
    }
    out
}

/// One tracking step: grid search, then least-squares re-fits on the ridge
/// pixels near the current curve. The domain and axis stay fixed.
pub fn track_step(prev: &TrackState, ridge: &BinaryMask, p: &TrackParams) -> Result<TrackState> {
    p.validate()?;
    let (mut poly, mut n) = grid_search(&prev.poly, ridge, p);
    if n < p.min_support {
        return Err(Error::TrackingLost {
            support: n,
            min_support: p.min_support,
        });
    }
    for _ in 0..p.refine_iterations {
        let pts = inliers(&poly, ridge, p.tolerance + 1.0);
        let Ok(mut refit) = fit_poly2_along(&pts, poly.axis) else {
            break;
        };
        refit.domain = poly.domain;
        let rn = support(&refit, ridge, p.tolerance);
        if rn < n {
            break;
        }
        poly = refit;
        n = rn;
    }
    Ok(TrackState {
        poly,
        frame_index: prev.frame_index + 1,
        search_window: p.search_window,
        fit_support: n,
        lost: false,
    })
}

#[cfg(test)]
mod tests {
    use super::super::poly::Axis;
    use super::*;

    fn curve_mask(poly: &Poly2, w: usize, h: usize) -> BinaryMask {
        let mut m = BinaryMask::new(w, h);
        for (x, y) in poly.raster(w, h) {
            m.set(x, y, true);
        }
        m
    }

    fn state(poly: Poly2) -> TrackState {
        TrackState {
            poly,
            frame_index: 0,
            search_window: TrackParams::default().search_window,
            fit_support: 0,
            lost: false,
        }
    }

    fn truth() -> Poly2 {
        Poly2::new(4e-4, 0.15, 60.0, Axis::X, (10.0, 230.0)).unwrap()
    }

    #[test]
    fn stationary_frame_stays_put() {
        let p = TrackParams::default();
        let m = curve_mask(&truth(), 256, 256);
        let next = track_step(&state(truth()), &m, &p).unwrap();
        let (da, db, dc) = p.search_window;
        assert!((next.poly.a - truth().a).abs() <= 2.0 * da / 10.0);
        assert!((next.poly.b - truth().b).abs() <= 2.0 * db / 10.0);
        assert!((next.poly.c - truth().c).abs() <= 2.0 * dc / 20.0);
        assert_eq!(next.frame_index, 1);
    }

    #[test]
    fn vertical_shift_recovered() {
        let p = TrackParams::default();
        let moved = truth().with_coefficients(truth().a, truth().b, truth().c + 3.0);
        let m = curve_mask(&moved, 256, 256);
        let next = track_step(&state(truth()), &m, &p).unwrap();
        assert!((next.poly.c - moved.c).abs() <= 1.0, "c = {}", next.poly.c);
        assert!((next.poly.a - moved.a).abs() <= 1e-4);
        assert!((next.poly.b - moved.b).abs() <= 0.02);
    }

    #[test]
    fn erased_catheter_is_lost() {
        let m = BinaryMask::new(256, 256);
        let err = track_step(&state(truth()), &m, &TrackParams::default()).unwrap_err();
        assert!(matches!(err, Error::TrackingLost { support: 0, .. }));
    }

    #[test]
    fn grid_search_matches_enumeration() {
        let p = TrackParams {
            grid: (3, 3, 5),
            ..TrackParams::default()
        };
        let moved = truth().with_coefficients(truth().a, truth().b + 0.03, truth().c - 4.0);
        let m = curve_mask(&moved, 256, 256);
        let (best, n) = grid_search(&truth(), &m, &p);
        let (da, db, dc) = p.search_window;
        let mut max = 0;
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..5 {
                    let cand = truth().with_coefficients(
                        truth().a - da + da * i as f64,
                        truth().b - db + db * j as f64,
                        truth().c - dc + dc * k as f64 / 2.0,
                    );
                    max = max.max(support(&cand, &m, p.tolerance));
                }
            }
        }
        assert_eq!(n, max);
        assert_eq!(support(&best, &m, p.tolerance), n);
    }
}
