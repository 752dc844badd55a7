//! Connected-component labeling of binary masks.

use super::BinaryMask;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Connectivity {
    Four,
    Eight,
}

impl Connectivity {
    pub(crate) fn offsets(self) -> &'static [(isize, isize)] {
        match self {
            Connectivity::Four => &[(1, 0), (-1, 0), (0, 1), (0, -1)],
            Connectivity::Eight => &[
                (1, 0),
                (-1, 0),
                (0, 1),
                (0, -1),
                (1, 1),
                (1, -1),
                (-1, 1),
                (-1, -1),
            ],
        }
    }
}

/// Component id per pixel (`None` for unset pixels) and the pixel lists of
/// every component, numbered in raster order of their first pixel.
pub struct Components {
    pub labels: Vec<Option<usize>>,
    pub members: Vec<Vec<(usize, usize)>>,
}

pub fn label_components(mask: &BinaryMask, conn: Connectivity) -> Components {
    let (w, h) = mask.dims();
    let mut labels = vec![None; w * h];
    let mut members = Vec::new();
    let mut stack = Vec::new();
    for start in 0..w * h {
        if !mask.bits()[start] || labels[start].is_some() {
            continue;
        }
        let id = members.len();
        let mut pixels = Vec::new();
        labels[start] = Some(id);
        stack.push(start);
        while let Some(p) = stack.pop() {
            let (x, y) = (p % w, p / w);
            pixels.push((x, y));
            for &(dx, dy) in conn.offsets() {
                let nx = x as isize + dx;
                let ny = y as isize + dy;
                if mask.get_signed(nx, ny) {
                    let q = ny as usize * w + nx as usize;
                    if labels[q].is_none() {
                        labels[q] = Some(id);
                        stack.push(q);
                    }
                }
            }
        }
        pixels.sort_unstable_by_key(|&(x, y)| (y, x));
        members.push(pixels);
    }
    Components { labels, members }
}
