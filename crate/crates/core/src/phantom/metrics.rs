//! Overlap and distance-tolerant scores between predictions and truth.

use crate::catheter::Poly2;
use crate::error::{Error, Result};
use crate::imgcore::{ensure_same_dims, stamp_circle, BinaryMask};

/// `2|a & b| / (|a| + |b|)`, one when both masks are empty.
pub fn dice(a: &BinaryMask, b: &BinaryMask) -> Result<f64> {
    ensure_same_dims(a.dims(), b.dims())?;
    let inter = a.and(b)?.count();
    let total = a.count() + b.count();
    if total == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * inter as f64 / total as f64)
}

/// Pixels within Euclidean distance `tol` of some set pixel of `mask`.
pub fn within(mask: &BinaryMask, tol: f64) -> BinaryMask {
    let mut out = mask.clone();
    for (x, y) in mask.iter_set() {
        stamp_circle(&mut out, (x as f64, y as f64), tol);
    }
    out
}

fn fraction_near(points: &BinaryMask, target: &BinaryMask, tol: f64, what: &str) -> Result<f64> {
    ensure_same_dims(points.dims(), target.dims())?;
    let n = points.count();
    if n == 0 {
        return Err(Error::UndefinedMetric(format!(
            "{what}: no reference pixels"
        )));
    }
    let near = within(target, tol);
    Ok(points.and(&near)?.count() as f64 / n as f64)
}

/// Share of the rasterized curve lying within `tol` of the true catheter.
pub fn catheter_precision(poly: &Poly2, gt: &BinaryMask, tol: f64) -> Result<f64> {
    let (w, h) = gt.dims();
    let mut curve = BinaryMask::new(w, h);
    for (x, y) in poly.raster(w, h) {
        curve.set(x, y, true);
    }
    fraction_near(&curve, gt, tol, "catheter precision")
}

/// Mask pixels with a 4-neighbor outside the mask or on the frame edge.
pub fn mask_boundary(mask: &BinaryMask) -> BinaryMask {
    let (w, h) = mask.dims();
    BinaryMask::from_fn(w, h, |x, y| {
        let (xi, yi) = (x as isize, y as isize);
        mask.get(x, y)
            && (!mask.get_signed(xi - 1, yi)
                || !mask.get_signed(xi + 1, yi)
                || !mask.get_signed(xi, yi - 1)
                || !mask.get_signed(xi, yi + 1))
    })
}

/// Share of the true object boundary within `tol` of a predicted boundary.
pub fn boundary_recall(gt_mask: &BinaryMask, boundaries: &BinaryMask, tol: f64) -> Result<f64> {
    fraction_near(&mask_boundary(gt_mask), boundaries, tol, "boundary recall")
}

/// Share of the true centerline within `tol` of the extracted one.
pub fn centerline_coverage(gt: &BinaryMask, extracted: &BinaryMask, tol: f64) -> Result<f64> {
    fraction_near(gt, extracted, tol, "centerline coverage")
}

pub fn false_positives(pred: &BinaryMask, gt: &BinaryMask) -> Result<usize> {
    Ok(pred.and_not(gt)?.count())
}
