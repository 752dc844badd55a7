//! Superpixel-based initial segmentation, profile-based refinement and
//! centerline extraction.

use crate::error::{Error, Result};
use crate::imgcore::{
    ensure_same_dims, label_components, raster_line, stamp_circle, BinaryMask, Connectivity,
    GrayImage,
};
use crate::ridgedet::RidgeMaps;
use crate::superpix::{scaled_k, slic, LabelMap, SlicParams};

#[derive(Clone, Debug, PartialEq)]
pub struct SuperpixelStats {
    /// Mean contrast-enhanced intensity per label.
    pub n_ce: Vec<f64>,
    /// Mean vesselness per label.
    pub n_v: Vec<f64>,
    /// `n_v - n_ce`, min-max normalized across labels.
    pub rho: Vec<f64>,
    pub pixel_count: Vec<usize>,
}

pub fn superpixel_stats(
    labels: &LabelMap,
    ce: &GrayImage,
    v: &GrayImage,
) -> Result<SuperpixelStats> {
    ensure_same_dims(labels.dims(), ce.dims())?;
    ensure_same_dims(labels.dims(), v.dims())?;
    let k = labels.k_actual;
    let mut sum_ce = vec![0.0; k];
    let mut sum_v = vec![0.0; k];
    let mut count = vec![0usize; k];
    for (i, &l) in labels.labels().iter().enumerate() {
        sum_ce[l] += ce.data()[i];
        sum_v[l] += v.data()[i];
        count[l] += 1;
    }
    let n_ce: Vec<f64> = sum_ce
        .iter()
        .zip(&count)
        .map(|(s, &n)| s / n as f64)
        .collect();
    let n_v: Vec<f64> = sum_v
        .iter()
        .zip(&count)
        .map(|(s, &n)| s / n as f64)
        .collect();
    let raw: Vec<f64> = n_v.iter().zip(&n_ce).map(|(a, b)| a - b).collect();
    let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let rho = if span > 1e-12 {
        raw.iter().map(|r| (r - lo) / span).collect()
    } else {
        vec![0.0; k]
    };
    Ok(SuperpixelStats {
        n_ce,
        n_v,
        rho,
        pixel_count: count,
    })
}

/// Pixels of every superpixel whose `rho` is at least `t`.
pub fn initial_mask(stats: &SuperpixelStats, labels: &LabelMap, t: f64) -> Result<BinaryMask> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::invalid(format!(
            "superpixel threshold must be in (0, 1), got {t}"
        )));
    }
    if stats.rho.len() != labels.k_actual {
        return Err(Error::invalid("statistics do not belong to this label map"));
    }
    let (w, h) = labels.dims();
    let bits = labels.labels().iter().map(|&l| stats.rho[l] >= t).collect();
    BinaryMask::from_bits(w, h, bits)
}

/// Adds every superpixel touched by a low-threshold ridge component that
/// already meets the mask.
pub fn augment_with_ridges(
    mask: &BinaryMask,
    ridge_low: &BinaryMask,
    labels: &LabelMap,
) -> Result<BinaryMask> {
    ensure_same_dims(mask.dims(), ridge_low.dims())?;
    ensure_same_dims(mask.dims(), labels.dims())?;
    let w = mask.width();
    let mut add = vec![false; labels.k_actual];
    for comp in label_components(ridge_low, Connectivity::Eight).members {
        if comp.iter().any(|&(x, y)| mask.get(x, y)) {
            for &(x, y) in &comp {
                add[labels.labels()[y * w + x]] = true;
            }
        }
    }
    let bits = mask
        .bits()
        .iter()
        .zip(labels.labels())
        .map(|(&m, &l)| m || add[l])
        .collect();
    BinaryMask::from_bits(w, mask.height(), bits)
}

/// Set where at least two of the three inputs are set.
pub fn majority_vote(m1: &BinaryMask, m2: &BinaryMask, m3: &BinaryMask) -> Result<BinaryMask> {
    ensure_same_dims(m1.dims(), m2.dims())?;
    ensure_same_dims(m1.dims(), m3.dims())?;
    let bits = m1
        .bits()
        .iter()
        .zip(m2.bits())
        .zip(m3.bits())
        .map(|((&a, &b), &c)| (a as u8 + b as u8 + c as u8) >= 2)
        .collect();
    BinaryMask::from_bits(m1.width(), m1.height(), bits)
}

/// Which values decide whether a ridge pixel failing the depth test is
/// kept anyway.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RescueRule {
    /// Keep if the vesselness at the pixel reaches the mean of the top
    /// quarter of vesselness values over all candidate ridge pixels.
    Vesselness,
    /// Same rule on contrast-enhanced intensities, keeping pixels strictly
    /// above the top-quarter mean.
    Intensity,
    Off,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RefineParams {
    /// Diameter of the circle whose diameters are probed, in pixels.
    pub d: usize,
    /// Minimum depth of the profile on both sides of its minimum.
    pub t_d: f64,
    /// Descending per-pixel drop thresholds tried when locating boundaries.
    pub boundary_thresholds: Vec<f64>,
    pub profile_smooth_width: usize,
    pub rescue: RescueRule,
}

impl Default for RefineParams {
    fn default() -> Self {
        Self {
            d: 25,
            t_d: 0.2,
            boundary_thresholds: vec![0.2, 0.1, 0.05, 0.02, 0.0],
            profile_smooth_width: 3,
            rescue: RescueRule::Vesselness,
        }
    }
}

impl RefineParams {
    pub fn validate(&self) -> Result<()> {
        if self.d < 3 {
            return Err(Error::invalid("profile diameter must be at least 3"));
        }
        if !(self.t_d > 0.0 && self.t_d < 1.0) {
            return Err(Error::invalid("profile depth threshold must be in (0, 1)"));
        }
        if self.boundary_thresholds.is_empty()
            || self.boundary_thresholds.windows(2).any(|w| w[1] >= w[0])
            || self.boundary_thresholds.iter().any(|&t| t < 0.0)
        {
            return Err(Error::invalid(
                "boundary thresholds must be non-negative and strictly descending",
            ));
        }
        if self.profile_smooth_width == 0 {
            return Err(Error::invalid("profile smoothing width must be at least 1"));
        }
        Ok(())
    }
}

/// Unit direction of angle `theta_deg`, measured counter-clockwise from the
/// positive x axis as the image is displayed (rows grow downward).
fn direction(theta_deg: f64) -> (f64, f64) {
    let t = theta_deg.to_radians();
    (t.cos(), -t.sin())
}

/// In-frame pixels of the rasterized diameter through `center`.
pub fn diameter_pixels(
    center: (usize, usize),
    theta_deg: f64,
    d: usize,
    dims: (usize, usize),
) -> Vec<(usize, usize)> {
    let r = ((d.max(1) - 1) / 2) as f64;
    let (dx, dy) = direction(theta_deg);
    let (cx, cy) = (center.0 as f64, center.1 as f64);
    let p0 = (
        (cx - r * dx).round() as isize,
        (cy - r * dy).round() as isize,
    );
    let p1 = (
        (cx + r * dx).round() as isize,
        (cy + r * dy).round() as isize,
    );
    raster_line(p0, p1)
        .into_iter()
        .filter(|&(x, y)| x >= 0 && y >= 0 && (x as usize) < dims.0 && (y as usize) < dims.1)
        .map(|(x, y)| (x as usize, y as usize))
        .collect()
}

/// Angle in whole degrees `1..=180` of the diameter with the highest mean
/// intensity; ties go to the smallest angle.
pub fn orthogonal_direction(ce: &GrayImage, center: (usize, usize), d: usize) -> f64 {
    let mut best = (1.0, f64::NEG_INFINITY);
    for deg in 1..=180 {
        let px = diameter_pixels(center, deg as f64, d, ce.dims());
        let mean = px.iter().map(|&(x, y)| ce.get(x, y)).sum::<f64>() / px.len() as f64;
        if mean > best.1 + 1e-12 {
            best = (deg as f64, mean);
        }
    }
    best.0
}

/// Intensities sampled at unit steps along a diameter, clipped to the frame.
#[derive(Clone, Debug, PartialEq)]
pub struct Profile {
    pub values: Vec<f64>,
    /// Index of the sample at the circle center.
    pub center: usize,
}

pub fn sample_profile(ce: &GrayImage, center: (usize, usize), theta_deg: f64, d: usize) -> Profile {
    let r = ((d.max(1) - 1) / 2) as isize;
    let (dx, dy) = direction(theta_deg);
    let (w, h) = ce.dims();
    let (cx, cy) = (center.0 as f64, center.1 as f64);
    let mut values = Vec::with_capacity(2 * r as usize + 1);
    let mut c = 0;
    for k in -r..=r {
        let x = cx + k as f64 * dx;
        let y = cy + k as f64 * dy;
        if x < -0.5 || y < -0.5 || x > w as f64 - 0.5 || y > h as f64 - 0.5 {
            continue;
        }
        if k == 0 {
            c = values.len();
        }
        values.push(bilinear(ce, x, y));
    }
    Profile { values, center: c }
}

fn bilinear(img: &GrayImage, x: f64, y: f64) -> f64 {
    let (w, h) = img.dims();
    let x = x.clamp(0.0, (w - 1) as f64);
    let y = y.clamp(0.0, (h - 1) as f64);
    let (x0, y0) = (x.floor() as usize, y.floor() as usize);
    let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
    let (fx, fy) = (x - x0 as f64, y - y0 as f64);
    let top = img.get(x0, y0) * (1.0 - fx) + img.get(x1, y0) * fx;
    let bottom = img.get(x0, y1) * (1.0 - fx) + img.get(x1, y1) * fx;
    top * (1.0 - fy) + bottom * fy
}

/// Moving average with the window clipped at the ends.
pub fn smooth_profile(values: &[f64], width: usize) -> Vec<f64> {
    let r = width.max(1) / 2;
    (0..values.len())
        .map(|i| {
            let lo = i.saturating_sub(r);
            let hi = (i + r).min(values.len() - 1);
            values[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProfileVerdict {
    pub keep: bool,
    pub l1: f64,
    pub l2: f64,
}

/// Depth test on a raw profile: smooth it, take the minimum of its middle
/// third, and measure the rise to the maximum on each side.
pub fn profile_test(profile: &[f64], p: &RefineParams, rescued: bool) -> ProfileVerdict {
    if profile.is_empty() {
        return ProfileVerdict {
            keep: rescued,
            l1: 0.0,
            l2: 0.0,
        };
    }
    let s = smooth_profile(profile, p.profile_smooth_width);
    let n = s.len();
    let (lo, hi) = (n / 3, (2 * n).div_ceil(3).max(n / 3 + 1).min(n));
    let mut imin = lo;
    for i in lo..hi {
        if s[i] < s[imin] {
            imin = i;
        }
    }
    let min = s[imin];
    let l1 = s[..=imin].iter().copied().fold(f64::NEG_INFINITY, f64::max) - min;
    let l2 = s[imin..].iter().copied().fold(f64::NEG_INFINITY, f64::max) - min;
    ProfileVerdict {
        keep: l1.min(l2) >= p.t_d || rescued,
        l1,
        l2,
    }
}

/// Boundary indices on both sides of `center`. From the left end a pixel is
/// a boundary when the drop to its right neighbor reaches the threshold;
/// mirrored on the right. Each side walks down the threshold ladder until a
/// boundary is found; a zero threshold always matches.
pub fn find_boundaries(profile: &[f64], center: usize, thresholds: &[f64]) -> (usize, usize) {
    let n = profile.len();
    if n == 0 {
        return (0, 0);
    }
    let c = center.min(n - 1);
    let mut left = 0;
    'l: for &t in thresholds {
        for i in 0..c {
            if profile[i] - profile[i + 1] >= t {
                left = i;
                break 'l;
            }
        }
    }
    let mut right = n - 1;
    'r: for &t in thresholds {
        for i in (c + 1..n).rev() {
            if profile[i] - profile[i - 1] >= t {
                right = i;
                break 'r;
            }
        }
    }
    (left.min(c), right.max(c))
}

/// Mean of the upper quarter of `values` (at least one value).
fn top_quarter_mean(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let q = values.len().div_ceil(4).max(1);
    let top = &values[values.len() - q..];
    top.iter().sum::<f64>() / q as f64
}

/// Radii of the circles stamped during refinement, one per kept ridge pixel.
#[derive(Clone, Debug, PartialEq)]
pub struct Refinement {
    pub mask: BinaryMask,
    pub stamps: Vec<((usize, usize), f64)>,
}

pub fn refine(
    initial: &BinaryMask,
    ridge_high: &BinaryMask,
    ce: &GrayImage,
    v: &GrayImage,
    p: &RefineParams,
) -> Result<Refinement> {
    p.validate()?;
    ensure_same_dims(initial.dims(), ridge_high.dims())?;
    ensure_same_dims(initial.dims(), ce.dims())?;
    ensure_same_dims(initial.dims(), v.dims())?;
    let ridges: Vec<(usize, usize)> = ridge_high.and(initial)?.iter_set().collect();
    let (w, h) = initial.dims();
    let mut circles = BinaryMask::new(w, h);
    let mut stamps = Vec::new();
    if ridges.is_empty() {
        return Ok(Refinement {
            mask: circles,
            stamps,
        });
    }
    let rescue_value = |x: usize, y: usize| match p.rescue {
        RescueRule::Vesselness => v.get(x, y),
        RescueRule::Intensity | RescueRule::Off => ce.get(x, y),
    };
    let mut vals: Vec<f64> = ridges.iter().map(|&(x, y)| rescue_value(x, y)).collect();
    let level = top_quarter_mean(&mut vals);
    for &(x, y) in &ridges {
        let value = rescue_value(x, y);
        let rescued = match p.rescue {
            RescueRule::Vesselness => value >= level,
            RescueRule::Intensity => value > level,
            RescueRule::Off => false,
        };
        let theta = orthogonal_direction(ce, (x, y), p.d);
        let prof = sample_profile(ce, (x, y), theta, p.d);
        if !profile_test(&prof.values, p, rescued).keep {
            continue;
        }
        let smoothed = smooth_profile(&prof.values, p.profile_smooth_width);
        let (l, r) = find_boundaries(&smoothed, prof.center, &p.boundary_thresholds);
        let rd = (prof.center - l).min(r - prof.center) as f64;
        stamp_circle(&mut circles, (x as f64, y as f64), rd);
        stamps.push(((x, y), rd));
    }
    Ok(Refinement {
        mask: circles.and(initial)?,
        stamps,
    })
}

pub fn extract_centerline(artery: &BinaryMask, ridge_low: &BinaryMask) -> Result<BinaryMask> {
    artery.and(ridge_low)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SegmentParams {
    /// Superpixel counts for a 512x512 frame; scaled by area for other sizes.
    pub scales: [usize; 3],
    pub threshold: f64,
    pub slic: SlicParams,
    pub refine: RefineParams,
}

impl Default for SegmentParams {
    fn default() -> Self {
        Self {
            scales: [2000, 3000, 4000],
            threshold: 0.5,
            slic: SlicParams::new(2000),
            refine: RefineParams::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SegmentationResult {
    pub artery_mask: BinaryMask,
    pub centerline_mask: BinaryMask,
    /// Per-scale masks after ridge augmentation.
    pub initial_masks: Vec<BinaryMask>,
    pub voted_mask: BinaryMask,
    pub label_maps: Vec<LabelMap>,
}

pub fn segment_frame(
    ce: &GrayImage,
    v: &GrayImage,
    ridges: &RidgeMaps,
    p: &SegmentParams,
) -> Result<SegmentationResult> {
    ensure_same_dims(ce.dims(), v.dims())?;
    ensure_same_dims(ce.dims(), ridges.low.dims())?;
    let (w, h) = ce.dims();
    let mut initial_masks = Vec::with_capacity(3);
    let mut label_maps = Vec::with_capacity(3);
    for &k in &p.scales {
        let sp = SlicParams {
            k: scaled_k(k, w, h),
            ..p.slic
        };
        let labels = slic(ce, &sp)?;
        let stats = superpixel_stats(&labels, ce, v)?;
        let m = initial_mask(&stats, &labels, p.threshold)?;
        initial_masks.push(augment_with_ridges(&m, &ridges.low, &labels)?);
        label_maps.push(labels);
    }
    let voted = majority_vote(&initial_masks[0], &initial_masks[1], &initial_masks[2])?;
    let refined = refine(&voted, &ridges.high, ce, v, &p.refine)?;
    let centerline = extract_centerline(&refined.mask, &ridges.low)?;
    Ok(SegmentationResult {
        artery_mask: refined.mask,
        centerline_mask: centerline,
        initial_masks,
        voted_mask: voted,
        label_maps,
    })
}
