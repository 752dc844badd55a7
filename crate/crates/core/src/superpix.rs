//! SLIC superpixels on a single-channel image.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::imgcore::{BinaryMask, GrayImage};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlicParams {
    pub k: usize,
    /// Weight of spatial distance against intensity difference.
    pub m: f64,
    pub max_iter: usize,
    /// Mean center movement in pixels below which iteration stops.
    pub conv_tol: f64,
}

impl SlicParams {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            m: 0.1,
            max_iter: 10,
            conv_tol: 0.25,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::invalid("superpixel count must be at least 1"));
        }
        if !(self.m > 0.0) {
            return Err(Error::invalid("compactness must be positive"));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("at least one iteration is required"));
        }
        if !(self.conv_tol >= 0.0) {
            return Err(Error::invalid("convergence tolerance must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelMap {
    width: usize,
    height: usize,
    labels: Vec<usize>,
    pub k_requested: usize,
    pub k_actual: usize,
}

impl LabelMap {
    /// Labels must be dense: every id below the maximum must occur.
    pub fn new(
        width: usize,
        height: usize,
        labels: Vec<usize>,
        k_requested: usize,
    ) -> Result<Self> {
        if labels.len() != width * height || labels.is_empty() {
            return Err(Error::invalid("label buffer does not match dimensions"));
        }
        let k_actual = labels.iter().max().map_or(0, |&m| m + 1);
        let mut used = vec![false; k_actual];
        for &l in &labels {
            used[l] = true;
        }
        if used.iter().any(|&u| !u) {
            return Err(Error::invalid("label ids must be dense"));
        }
        Ok(Self {
            width,
            height,
            labels,
            k_requested,
            k_actual,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    #[inline]
    pub fn label(&self, x: usize, y: usize) -> usize {
        self.labels[y * self.width + x]
    }

    pub fn pixel_counts(&self) -> Vec<usize> {
        let mut n = vec![0; self.k_actual];
        for &l in &self.labels {
            n[l] += 1;
        }
        n
    }

    /// Pixels with a 4-neighbor carrying a different label.
    pub fn boundaries(&self) -> BinaryMask {
        let (w, h) = self.dims();
        BinaryMask::from_fn(w, h, |x, y| {
            let l = self.label(x, y);
            (x > 0 && self.label(x - 1, y) != l)
                || (x + 1 < w && self.label(x + 1, y) != l)
                || (y > 0 && self.label(x, y - 1) != l)
                || (y + 1 < h && self.label(x, y + 1) != l)
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Center {
    pub l: f64,
    pub x: f64,
    pub y: f64,
}

/// Raw clustering before connectivity cleanup. `labels` is the assignment
/// to `centers` under the returned geometry.
#[derive(Clone, Debug, PartialEq)]
pub struct Clusters {
    pub labels: Vec<usize>,
    pub centers: Vec<Center>,
    /// Normalizing grid interval `sqrt(N / k)`.
    pub s: f64,
    /// Half-width of each center's square search region.
    pub search: f64,
    pub m: f64,
}

/// Squared SLIC distance of a pixel to a center.
#[inline]
pub fn slic_distance2(c: &Center, l: f64, x: f64, y: f64, s: f64, m: f64) -> f64 {
    let dc = l - c.l;
    let ds2 = (x - c.x).powi(2) + (y - c.y).powi(2);
    dc * dc + ds2 / (s * s) * m * m
}

fn seed_centers(img: &GrayImage, k: usize) -> Vec<Center> {
    let (w, h) = img.dims();
    let nx = ((k as f64 * w as f64 / h as f64).sqrt().ceil() as usize).clamp(1, w);
    let ny = ((k as f64 / nx as f64).round() as usize).clamp(1, h);
    let grad = |x: usize, y: usize| {
        let (xi, yi) = (x as isize, y as isize);
        let gx = img.get_clamped(xi + 1, yi) - img.get_clamped(xi - 1, yi);
        let gy = img.get_clamped(xi, yi + 1) - img.get_clamped(xi, yi - 1);
        gx * gx + gy * gy
    };
    let mut centers = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let sx = (((i as f64 + 0.5) * w as f64 / nx as f64) as usize).min(w - 1);
            let sy = (((j as f64 + 0.5) * h as f64 / ny as f64) as usize).min(h - 1);
            let (mut bx, mut by, mut bg) = (sx, sy, grad(sx, sy));
            for y in sy.saturating_sub(1)..=(sy + 1).min(h - 1) {
                for x in sx.saturating_sub(1)..=(sx + 1).min(w - 1) {
                    let g = grad(x, y);
                    if g < bg {
                        (bx, by, bg) = (x, y, g);
                    }
                }
            }
            centers.push(Center {
                l: img.get(bx, by),
                x: bx as f64,
                y: by as f64,
            });
        }
    }
    centers
}

/// One assignment pass: each center claims the pixels of its search region
/// that it is strictly closer to than any earlier center. Pixels outside
/// every region go to the globally nearest center.
pub fn slic_assign(img: &GrayImage, centers: &[Center], s: f64, search: f64, m: f64) -> Vec<usize> {
    let (w, h) = img.dims();
    let mut best = vec![f64::INFINITY; w * h];
    let mut label = vec![usize::MAX; w * h];
    for (ci, c) in centers.iter().enumerate() {
        let x0 = (c.x - search).ceil().max(0.0) as usize;
        let y0 = (c.y - search).ceil().max(0.0) as usize;
        let x1 = ((c.x + search).floor()).min((w - 1) as f64);
        let y1 = ((c.y + search).floor()).min((h - 1) as f64);
        if x1 < 0.0 || y1 < 0.0 {
            continue;
        }
        for y in y0..=y1 as usize {
            for x in x0..=x1 as usize {
                let i = y * w + x;
                let d = slic_distance2(c, img.data()[i], x as f64, y as f64, s, m);
                if d < best[i] {
                    best[i] = d;
                    label[i] = ci;
                }
            }
        }
    }
    for i in 0..w * h {
        if label[i] == usize::MAX {
            let (x, y) = ((i % w) as f64, (i / w) as f64);
            let l = img.data()[i];
            label[i] = (0..centers.len())
                .min_by(|&a, &b| {
                    slic_distance2(&centers[a], l, x, y, s, m)
                        .total_cmp(&slic_distance2(&centers[b], l, x, y, s, m))
                        .then(a.cmp(&b))
                })
                .unwrap_or(0);
        }
    }
    label
}

/// Seeding and k-means iterations without the connectivity step.
pub fn slic_clusters(img: &GrayImage, p: &SlicParams) -> Result<Clusters> {
    p.validate()?;
    let (w, h) = img.dims();
    let n = w * h;
    if p.k > n {
        return Err(Error::invalid(format!(
            "cannot make {} superpixels from {} pixels",
            p.k, n
        )));
    }
    let s = (n as f64 / p.k as f64).sqrt();
    let mut centers = seed_centers(img, p.k);
    let nx = centers
        .iter()
        .filter(|c| c.y == centers[0].y)
        .count()
        .max(1);
    let ny = centers.len().div_ceil(nx);
    let search = s.max(w as f64 / nx as f64).max(h as f64 / ny as f64);

    for _ in 0..p.max_iter {
        let labels = slic_assign(img, &centers, s, search, p.m);
        let mut sums = vec![(0.0, 0.0, 0.0, 0usize); centers.len()];
        for (i, &l) in labels.iter().enumerate() {
            let e = &mut sums[l];
            e.0 += img.data()[i];
            e.1 += (i % w) as f64;
            e.2 += (i / w) as f64;
            e.3 += 1;
        }
        let mut moved = 0.0;
        for (c, &(sl, sx, sy, cnt)) in centers.iter_mut().zip(&sums) {
            if cnt == 0 {
                continue;
            }
            let k = cnt as f64;
            let next = Center {
                l: sl / k,
                x: sx / k,
                y: sy / k,
            };
            moved += ((next.x - c.x).powi(2) + (next.y - c.y).powi(2)).sqrt();
            *c = next;
        }
        if moved / (centers.len() as f64) < p.conv_tol {
            break;
        }
    }
    let labels = slic_assign(img, &centers, s, search, p.m);
    Ok(Clusters {
        labels,
        centers,
        s,
        search,
        m: p.m,
    })
}

pub fn slic(img: &GrayImage, p: &SlicParams) -> Result<LabelMap> {
    let c = slic_clusters(img, p)?;
    let (w, h) = img.dims();
    Ok(enforce_connectivity_raw(w, h, &c.labels, p.k))
}

/// Splits labels into 4-connected regions and merges regions smaller than
/// a quarter of the nominal superpixel area into their largest neighbor.
pub fn enforce_connectivity(labels: &LabelMap) -> LabelMap {
    enforce_connectivity_raw(
        labels.width,
        labels.height,
        &labels.labels,
        labels.k_requested,
    )
}

fn enforce_connectivity_raw(w: usize, h: usize, labels: &[usize], k: usize) -> LabelMap {
    let n = w * h;
    let min_size = (n as f64 / (4.0 * k.max(1) as f64)).floor().max(1.0) as usize;

    // 4-connected regions of equal label.
    let mut comp = vec![usize::MAX; n];
    let mut sizes = Vec::new();
    let mut first_pixel = Vec::new();
    let mut stack = Vec::new();
    for start in 0..n {
        if comp[start] != usize::MAX {
            continue;
        }
        let id = sizes.len();
        let l = labels[start];
        comp[start] = id;
        stack.push(start);
        let mut size = 0;
        while let Some(p) = stack.pop() {
            size += 1;
            let (x, y) = (p % w, p / w);
            let mut visit = |q: usize| {
                if comp[q] == usize::MAX && labels[q] == l {
                    comp[q] = id;
                    stack.push(q);
                }
            };
            if x > 0 {
                visit(p - 1);
            }
            if x + 1 < w {
                visit(p + 1);
            }
            if y > 0 {
                visit(p - w);
            }
            if y + 1 < h {
                visit(p + w);
            }
        }
        sizes.push(size);
        first_pixel.push(start);
    }
    let nc = sizes.len();
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); nc];
    for y in 0..h {
        for x in 0..w {
            let a = comp[y * w + x];
            if x + 1 < w {
                let b = comp[y * w + x + 1];
                if a != b {
                    adj[a].insert(b);
                    adj[b].insert(a);
                }
            }
            if y + 1 < h {
                let b = comp[(y + 1) * w + x];
                if a != b {
                    adj[a].insert(b);
                    adj[b].insert(a);
                }
            }
        }
    }

    let mut parent: Vec<usize> = (0..nc).collect();
    fn root(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    let mut size = sizes.clone();
    let mut order: Vec<usize> = (0..nc).filter(|&c| sizes[c] < min_size).collect();
    order.sort_by_key(|&c| (sizes[c], c));
    for c in order {
        let r = root(&mut parent, c);
        if size[r] >= min_size {
            continue;
        }
        let neighbors: Vec<usize> = adj[r].iter().copied().collect();
        let mut target: Option<usize> = None;
        for nb in neighbors {
            let nr = root(&mut parent, nb);
            if nr == r {
                continue;
            }
            target = match target {
                Some(t) if size[t] > size[nr] || (size[t] == size[nr] && t < nr) => Some(t),
                _ => Some(nr),
            };
        }
        let Some(t) = target else { continue };
        parent[r] = t;
        size[t] += size[r];
        let moved = std::mem::take(&mut adj[r]);
        adj[t].extend(moved);
    }

    // New ids ordered by (original label, first pixel) of each surviving root.
    let mut roots: Vec<usize> = (0..nc).filter(|&c| root(&mut parent, c) == c).collect();
    roots.sort_by_key(|&c| (labels[first_pixel[c]], first_pixel[c]));
    let mut new_id = vec![usize::MAX; nc];
    for (i, &r) in roots.iter().enumerate() {
        new_id[r] = i;
    }
    let out: Vec<usize> = comp.iter().map(|&c| new_id[root(&mut parent, c)]).collect();
    LabelMap {
        width: w,
        height: h,
        labels: out,
        k_requested: k,
        k_actual: roots.len(),
    }
}

/// Superpixel count for a frame, scaling a count given for 512x512 frames
/// by pixel area.
pub fn scaled_k(k_at_512: usize, width: usize, height: usize) -> usize {
    let n = width * height;
    let k = (k_at_512 as f64 * n as f64 / (512.0 * 512.0)).round() as usize;
    k.clamp(1, n)
}
