//! Line and disk rasterization.

use super::BinaryMask;

/// 8-connected Bresenham line from `p0` to `p1`, both endpoints included.
pub fn raster_line(p0: (isize, isize), p1: (isize, isize)) -> Vec<(isize, isize)> {
    let (mut x, mut y) = p0;
    let dx = (p1.0 - x).abs();
    let dy = -(p1.1 - y).abs();
    let sx = if x < p1.0 { 1 } else { -1 };
    let sy = if y < p1.1 { 1 } else { -1 };
    let mut err = dx + dy;
    let mut out = Vec::with_capacity((dx.max(-dy) + 1) as usize);
    loop {
        out.push((x, y));
        if x == p1.0 && y == p1.1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
    out
}

/// Set every pixel with `(x - cx)^2 + (y - cy)^2 <= radius^2`, clipped to the mask.
pub fn stamp_circle(mask: &mut BinaryMask, center: (f64, f64), radius: f64) {
    if radius < 0.0 {
        return;
    }
    let (w, h) = mask.dims();
    let (cx, cy) = center;
    let r2 = radius * radius;
    let y0 = (cy - radius).floor().max(0.0) as isize;
    let y1 = (cy + radius).ceil().min(h as f64 - 1.0) as isize;
    let x0 = (cx - radius).floor().max(0.0) as isize;
    let x1 = (cx + radius).ceil().min(w as f64 - 1.0) as isize;
    for y in y0..=y1 {
        let dy = y as f64 - cy;
        for x in x0..=x1 {
            let dx = x as f64 - cx;
            if dx * dx + dy * dy <= r2 {
                mask.set(x as usize, y as usize, true);
            }
        }
    }
}

pub fn fill_circle(width: usize, height: usize, center: (f64, f64), radius: f64) -> BinaryMask {
    let mut mask = BinaryMask::new(width, height);
    stamp_circle(&mut mask, center, radius);
    mask
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_line() {
        assert_eq!(raster_line((0, 0), (0, 0)), vec![(0, 0)]);
    }

    #[test]
    fn diagonal_line() {
        assert_eq!(
            raster_line((0, 0), (3, 3)),
            vec![(0, 0), (1, 1), (2, 2), (3, 3)]
        );
    }

    #[test]
    fn lines_are_eight_connected() {
        for &(x1, y1) in &[(7, 2), (-5, 9), (3, -11), (-8, -8), (0, 6), (10, 0)] {
            let pts = raster_line((0, 0), (x1, y1));
            assert_eq!(*pts.last().unwrap(), (x1, y1));
            for pair in pts.windows(2) {
                let step = ((pair[1].0 - pair[0].0).abs(), (pair[1].1 - pair[0].1).abs());
                assert!(step.0 <= 1 && step.1 <= 1 && step != (0, 0));
            }
        }
    }

    #[test]
    fn circle_area_close_to_pi_r2() {
        let r = 25.0 / 2.0;
        let mask = fill_circle(64, 64, (32.0, 32.0), r);
        let expected = std::f64::consts::PI * r * r;
        let rel = (mask.count() as f64 - expected).abs() / expected;
        assert!(rel < 0.05, "relative area error {rel}");
    }

    #[test]
    fn circle_clipped_at_border() {
        let mask = fill_circle(10, 10, (0.0, 0.0), 3.0);
        // quarter disk of radius 3 on the integer lattice
        assert_eq!(mask.count(), 11);
    }
}
