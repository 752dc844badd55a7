//! Catheter detection in the first frame and quadratic-curve tracking
//! through the rest of a sequence.

mod hough;
mod poly;
mod track;

pub use hough::{hough_line_segments, hough_line_segments_with, HoughParams, LineSegment};
pub use poly::{fit_poly2, fit_poly2_along, Axis, Poly2};
pub use track::{grid_search, support, track_step, TrackParams, TrackState};

use crate::error::{Error, Result};
use crate::imgcore::{label_components, stamp_circle, BinaryMask, Connectivity};

/// Picks the 8-connected ridge component that most segments lie on. A
/// segment counts for a component when more than half its pixels belong to
/// it; ties go to the component holding the longest segment.
pub fn select_catheter_ridge(
    ridge: &BinaryMask,
    segments: &[LineSegment],
) -> Result<Vec<(usize, usize)>> {
    let comps = label_components(ridge, Connectivity::Eight);
    if comps.members.is_empty() {
        return Err(Error::DetectionFailed("ridge map has no components".into()));
    }
    let w = ridge.width();
    let mut count = vec![0usize; comps.members.len()];
    let mut longest = vec![0.0f64; comps.members.len()];
    for seg in segments {
        let mut tally: Vec<(usize, usize)> = Vec::new();
        for &(x, y) in &seg.pixels {
            if let Some(id) = comps.labels[y * w + x] {
                match tally.iter_mut().find(|t| t.0 == id) {
                    Some(t) => t.1 += 1,
                    None => tally.push((id, 1)),
                }
            }
        }
        if let Some(&(id, n)) = tally.iter().max_by_key(|t| t.1) {
            if 2 * n > seg.pixels.len() {
                count[id] += 1;
                longest[id] = longest[id].max(seg.length);
            }
        }
    }
    let best = (0..count.len())
        .filter(|&i| count[i] > 0)
        .max_by(|&i, &j| {
            count[i]
                .cmp(&count[j])
                .then(longest[i].total_cmp(&longest[j]))
                .then(j.cmp(&i))
        })
        .ok_or_else(|| {
            Error::DetectionFailed("no line segment lies on a ridge component".into())
        })?;
    Ok(comps.members[best].clone())
}

/// Curve rasterized into a band `width` pixels wide, clipped to the frame.
pub fn catheter_mask(poly: &Poly2, width: usize, dims: (usize, usize)) -> Result<BinaryMask> {
    if width == 0 {
        return Err(Error::invalid("catheter mask width must be at least 1"));
    }
    let (w, h) = dims;
    let mut mask = BinaryMask::new(w, h);
    // Trace with a margin so bands of curves just outside the frame still clip in.
    let margin = width / 2;
    let radius = (width as f64 - 1.0) / 2.0;
    for (x, y) in trace_with_margin(poly, w, h, margin) {
        if radius == 0.0 {
            if x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h {
                mask.set(x as usize, y as usize, true);
            }
        } else {
            stamp_circle(&mut mask, (x as f64, y as f64), radius);
        }
    }
    Ok(mask)
}

fn trace_with_margin(poly: &Poly2, w: usize, h: usize, margin: usize) -> Vec<(isize, isize)> {
    let m = margin as isize;
    let mf = m as f64;
    let (a, b, c) = (poly.a, poly.b, poly.c);
    // Same curve in coordinates shifted by (m, m):
    // v' = a (t' - m)^2 + b (t' - m) + c + m.
    let mut shifted = *poly;
    shifted.b = b - 2.0 * a * mf;
    shifted.c = a * mf * mf - b * mf + c + mf;
    shifted.domain = (poly.domain.0 + mf, poly.domain.1 + mf);
    shifted
        .raster(w + 2 * margin, h + 2 * margin)
        .into_iter()
        .map(|(x, y)| (x as isize - m, y as isize - m))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CatheterParams {
    pub top_n: usize,
    pub hough: HoughParams,
    pub track: TrackParams,
}

impl Default for CatheterParams {
    fn default() -> Self {
        Self {
            top_n: 10,
            hough: HoughParams::default(),
            track: TrackParams::default(),
        }
    }
}

/// Detects the catheter on the first ridge map and fits its curve.
pub fn detect_catheter(ridge: &BinaryMask, p: &CatheterParams) -> Result<TrackState> {
    let segments = hough_line_segments_with(ridge, p.top_n, &p.hough);
    let component = select_catheter_ridge(ridge, &segments)?;
    let pts: Vec<(f64, f64)> = component
        .iter()
        .map(|&(x, y)| (x as f64, y as f64))
        .collect();
    let poly = fit_poly2(&pts)?;
    let fit_support = support(&poly, ridge, p.track.tolerance);
    Ok(TrackState {
        poly,
        frame_index: 0,
        search_window: p.track.search_window,
        fit_support,
        lost: false,
    })
}

/// Detection on the first frame, then one tracking step per later frame.
/// A frame whose support falls below the minimum keeps the previous curve
/// and is flagged as lost.
pub fn track_sequence(frames: &[BinaryMask], p: &CatheterParams) -> Result<Vec<TrackState>> {
    let first = frames
        .first()
        .ok_or_else(|| Error::invalid("catheter tracking needs at least one frame"))?;
    p.track.validate()?;
    let mut states = vec![detect_catheter(first, p)?];
    let mut good = states[0].clone();
    for (i, ridge) in frames.iter().enumerate().skip(1) {
        crate::imgcore::ensure_same_dims(first.dims(), ridge.dims())?;
        let anchor = TrackState {
            frame_index: i - 1,
            ..good.clone()
        };
        match track_step(&anchor, ridge, &p.track) {
            Ok(s) => {
                good = s.clone();
                states.push(s);
            }
            Err(Error::TrackingLost { support, .. }) => states.push(TrackState {
                frame_index: i,
                fit_support: support,
                lost: true,
                ..good.clone()
            }),
            Err(e) => return Err(e),
        }
    }
    Ok(states)
}
