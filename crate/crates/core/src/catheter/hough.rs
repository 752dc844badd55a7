//! Straight segments on a ridge map via (rho, theta) voting.

use crate::imgcore::BinaryMask;

#[derive(Clone, Debug, PartialEq)]
pub struct LineSegment {
    pub start: (usize, usize),
    pub end: (usize, usize),
    /// Euclidean distance between the end pixels.
    pub length: f64,
    pub pixels: Vec<(usize, usize)>,
    pub rho: f64,
    pub theta: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HoughParams {
    pub theta_steps: usize,
    /// Distance from the line within which a ridge pixel counts as on it.
    pub tolerance: f64,
    /// Largest gap along the line that does not split a segment.
    pub max_gap: f64,
    pub min_length: f64,
}

impl Default for HoughParams {
    fn default() -> Self {
        Self {
            theta_steps: 180,
            tolerance: 1.0,
            max_gap: 3.0,
            min_length: 20.0,
        }
    }
}

pub fn hough_line_segments(ridge: &BinaryMask, top_n: usize) -> Vec<LineSegment> {
    hough_line_segments_with(ridge, top_n, &HoughParams::default())
}

/// Repeatedly takes the strongest accumulator cell, cuts the ridge pixels
/// along its line into gap-separated runs, keeps runs of sufficient length
/// and withdraws their votes. Result is sorted by decreasing length.
pub fn hough_line_segments_with(
    ridge: &BinaryMask,
    top_n: usize,
    p: &HoughParams,
) -> Vec<LineSegment> {
    let points: Vec<(usize, usize)> = ridge.iter_set().collect();
    if points.is_empty() || top_n == 0 {
        return Vec::new();
    }
    let (w, h) = ridge.dims();
    let nt = p.theta_steps.max(1);
    let trig: Vec<(f64, f64)> = (0..nt)
        .map(|i| (std::f64::consts::PI * i as f64 / nt as f64).sin_cos())
        .collect();
    let dmax = ((w * w + h * h) as f64).sqrt().ceil() as isize;
    let nr = (2 * dmax + 1) as usize;
    let bin = |x: usize, y: usize, (s, c): (f64, f64)| -> usize {
        ((x as f64 * c + y as f64 * s).round() as isize + dmax) as usize
    };

    let mut acc = vec![0u32; nt * nr];
    let vote = |acc: &mut [u32], &(x, y): &(usize, usize), add: bool| {
        for (ti, &sc) in trig.iter().enumerate() {
            let cell = &mut acc[ti * nr + bin(x, y, sc)];
            if add {
                *cell += 1;
            } else {
                *cell -= 1;
            }
        }
    };
    for pt in &points {
        vote(&mut acc, pt, true);
    }

    // A run of min_length pixels of arc has at least min_length / sqrt(2) pixels.
    let min_votes = (p.min_length / std::f64::consts::SQRT_2).floor().max(2.0) as u32;
    let mut alive = vec![true; points.len()];
    let mut dead = vec![false; acc.len()];
    let mut found = Vec::new();
    let cap = top_n.saturating_mul(3);
    while found.len() < cap {
        let mut best = None;
        let mut best_votes = min_votes - 1;
        for (i, &v) in acc.iter().enumerate() {
            if v > best_votes && !dead[i] {
                best_votes = v;
                best = Some(i);
            }
        }
        let Some(cell) = best else { break };
        let (ti, ri) = (cell / nr, cell % nr);
        let (s, c) = trig[ti];
        let rho = ri as f64 - dmax as f64;

        let mut on_line: Vec<(f64, usize)> = points
            .iter()
            .enumerate()
            .filter(|&(i, &(x, y))| {
                alive[i] && (x as f64 * c + y as f64 * s - rho).abs() <= p.tolerance
            })
            .map(|(i, &(x, y))| (-(x as f64) * s + y as f64 * c, i))
            .collect();
        on_line.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

        let mut accepted = false;
        let mut start = 0;
        for k in 1..=on_line.len() {
            if k < on_line.len() && on_line[k].0 - on_line[k - 1].0 <= p.max_gap {
                continue;
            }
            let run = &on_line[start..k];
            start = k;
            let first = points[run[0].1];
            let last = points[run[run.len() - 1].1];
            let dx = first.0 as f64 - last.0 as f64;
            let dy = first.1 as f64 - last.1 as f64;
            let length = (dx * dx + dy * dy).sqrt();
            if length < p.min_length {
                continue;
            }
            accepted = true;
            for &(_, i) in run {
                alive[i] = false;
                vote(&mut acc, &points[i], false);
            }
            found.push(LineSegment {
                start: first,
                end: last,
                length,
                pixels: run.iter().map(|&(_, i)| points[i]).collect(),
                rho,
                theta: ti as f64 * std::f64::consts::PI / nt as f64,
            });
        }
        if !accepted {
            dead[cell] = true;
        }
    }
    found.sort_by(|a, b| b.length.total_cmp(&a.length));
    found.truncate(top_n);
    found
}
