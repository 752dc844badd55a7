//! Synthetic angiogram sequences with exact ground truth, evaluation
//! metrics, and direct-definition reference implementations of the fast
//! kernels.

pub mod metrics;
pub mod oracles;
mod spec;

pub use spec::{CatheterSpec, Illumination, PhantomSpec, VesselSegment};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::catheter::Poly2;
use crate::error::Result;
use crate::imgcore::{raster_line, BinaryMask, GrayImage};

#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    pub vessel_mask: BinaryMask,
    pub centerline_mask: BinaryMask,
    pub catheter_mask: BinaryMask,
    /// Catheter curve as drawn in this frame.
    pub catheter: Option<Poly2>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhantomFrame {
    pub image: GrayImage,
    pub truth: GroundTruth,
}

/// Accumulates the darkening of tubes and their analytic masks.
struct Canvas {
    w: usize,
    h: usize,
    attenuation: Vec<f64>,
    mask: Vec<bool>,
    axis: Vec<bool>,
}

impl Canvas {
    fn new(w: usize, h: usize) -> Self {
        Self {
            w,
            h,
            attenuation: vec![0.0; w * h],
            mask: vec![false; w * h],
            axis: vec![false; w * h],
        }
    }

    /// Tube along a polyline: inverted-Gaussian profile with standard
    /// deviation `radius / 2`; mask is the set within `radius` of the axis.
    fn tube(&mut self, path: &[(f64, f64)], radius: f64, depth: f64) {
        let reach = 3.0 * radius;
        let sigma2 = (radius / 2.0).powi(2);
        for seg in path.windows(2) {
            let (a, b) = (seg[0], seg[1]);
            let x0 = (a.0.min(b.0) - reach).floor().max(0.0) as usize;
            let y0 = (a.1.min(b.1) - reach).floor().max(0.0) as usize;
            let x1 = (a.0.max(b.0) + reach).ceil().min(self.w as f64 - 1.0);
            let y1 = (a.1.max(b.1) + reach).ceil().min(self.h as f64 - 1.0);
            if x1 < 0.0 || y1 < 0.0 {
                continue;
            }
            for y in y0..=y1 as usize {
                for x in x0..=x1 as usize {
                    let d2 = point_segment_dist2((x as f64, y as f64), a, b);
                    if d2 > reach * reach {
                        continue;
                    }
                    let i = y * self.w + x;
                    let att = depth * (-d2 / (2.0 * sigma2)).exp();
                    if att > self.attenuation[i] {
                        self.attenuation[i] = att;
                    }
                    if d2 <= radius * radius {
                        self.mask[i] = true;
                    }
                }
            }
        }
        let mut prev: Option<(isize, isize)> = None;
        for &(x, y) in path {
            let p = (x.round() as isize, y.round() as isize);
            for (px, py) in raster_line(prev.unwrap_or(p), p) {
                if px >= 0 && py >= 0 && (px as usize) < self.w && (py as usize) < self.h {
                    self.axis[py as usize * self.w + px as usize] = true;
                }
            }
            prev = Some(p);
        }
    }

    fn masks(self) -> (Vec<f64>, BinaryMask, BinaryMask) {
        let mask = BinaryMask::from_bits(self.w, self.h, self.mask).expect("canvas size");
        let axis = BinaryMask::from_bits(self.w, self.h, self.axis).expect("canvas size");
        (self.attenuation, mask, axis)
    }
}

fn point_segment_dist2(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    };
    let (qx, qy) = (a.0 + t * dx, a.1 + t * dy);
    (p.0 - qx).powi(2) + (p.1 - qy).powi(2)
}

/// Renders `n_frames` frames. Vessel depth ramps linearly from zero after
/// `injection_start` over `injection_ramp` frames; the catheter is present
/// from the first frame and drifts by its per-frame coefficient offsets.
pub fn generate(spec: &PhantomSpec, n_frames: usize) -> Result<Vec<PhantomFrame>> {
    spec.validate()?;
    let tree = render_tree(spec);
    (0..n_frames).map(|f| render(spec, &tree, f)).collect()
}

/// Frame `index` of the sequence `spec` describes, without rendering the
/// frames before it.
pub fn render_frame(spec: &PhantomSpec, index: usize) -> Result<PhantomFrame> {
    spec.validate()?;
    render(spec, &render_tree(spec), index)
}

type TreeLayers = (Vec<f64>, BinaryMask, BinaryMask);

fn render_tree(spec: &PhantomSpec) -> TreeLayers {
    let mut tree = Canvas::new(spec.width, spec.height);
    for v in &spec.vessels {
        tree.tube(&v.polyline(), v.radius, 1.0);
    }
    tree.masks()
}

fn render(spec: &PhantomSpec, tree: &TreeLayers, f: usize) -> Result<PhantomFrame> {
    let (w, h) = (spec.width, spec.height);
    let (tree_att, tree_mask, tree_axis) = tree;
    let noise = Normal::new(0.0, spec.noise_sigma.max(0.0)).expect("finite sigma");
    let scale = spec.injection_scale(f);
    let (cath_att, cath_mask, cath_poly) = match &spec.catheter {
        Some(c) => {
            let poly = c.at_frame(f);
            let mut canvas = Canvas::new(w, h);
            canvas.tube(&poly.arc_samples(), c.radius, c.depth);
            let (att, mask, _) = canvas.masks();
            (att, mask, Some(poly))
        }
        None => (vec![0.0; w * h], BinaryMask::new(w, h), None),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(f as u64);
    let mut data = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let att = (spec.depth * scale * tree_att[i]).max(cath_att[i]);
            let mut v = (spec.background - att) * spec.illumination.factor(x, y, w, h);
            if spec.noise_sigma > 0.0 {
                v += noise.sample(&mut rng);
            }
            data.push(v.clamp(0.0, 1.0));
        }
    }
    let visible = scale > 0.0;
    let truth = GroundTruth {
        vessel_mask: if visible {
            tree_mask.clone()
        } else {
            BinaryMask::new(w, h)
        },
        centerline_mask: if visible {
            tree_axis.clone()
        } else {
            BinaryMask::new(w, h)
        },
        catheter_mask: cath_mask,
        catheter: cath_poly,
    };
    Ok(PhantomFrame {
        image: GrayImage::new(w, h, data)?,
        truth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blank_spec_gives_constant_frames() {
        let spec = PhantomSpec {
            vessels: Vec::new(),
            catheter: None,
            noise_sigma: 0.0,
            illumination: Illumination::default(),
            ..PhantomSpec::standard_tree(0)
        };
        for f in generate(&spec, 3).unwrap() {
            let (lo, hi) = f.image.min_max();
            assert_eq!(lo, hi);
            assert!(f.truth.vessel_mask.is_empty());
        }
    }

    #[test]
    fn same_seed_same_frames() {
        let spec = PhantomSpec::catheter_sequence(5);
        assert_eq!(generate(&spec, 3).unwrap(), generate(&spec, 3).unwrap());
        let other = PhantomSpec::catheter_sequence(6);
        assert_ne!(generate(&spec, 1).unwrap(), generate(&other, 1).unwrap());
    }

    #[test]
    fn straight_tube_area_matches_capsule() {
        let r = 4.0;
        let spec = PhantomSpec {
            width: 128,
            height: 128,
            vessels: vec![VesselSegment::line((20.3, 40.1), (100.7, 90.4), r)],
            catheter: None,
            noise_sigma: 0.0,
            injection_start: 0,
            injection_ramp: 1,
            ..PhantomSpec::standard_tree(0)
        };
        let frames = generate(&spec, 2).unwrap();
        let mask = &frames[1].truth.vessel_mask;
        let len = ((100.7f64 - 20.3).powi(2) + (90.4f64 - 40.1).powi(2)).sqrt();
        let analytic = 2.0 * r * len + std::f64::consts::PI * r * r;
        let got = mask.count() as f64;
        assert!(
            (got - analytic).abs() <= 0.03 * analytic,
            "{got} vs {analytic}"
        );
        assert!(frames[1].truth.centerline_mask.is_subset_of(mask));
    }

    #[test]
    fn injection_ramp_and_visibility() {
        let spec = PhantomSpec::standard_tree(1);
        assert_eq!(spec.injection_scale(0), 0.0);
        assert_eq!(spec.injection_scale(4), 1.0);
        let frames = generate(
            &PhantomSpec {
                noise_sigma: 0.0,
                ..spec
            },
            2,
        )
        .unwrap();
        assert!(frames[0].truth.vessel_mask.is_empty());
        assert!(!frames[1].truth.vessel_mask.is_empty());
    }

    #[test]
    fn vessels_are_darker_than_background() {
        let spec = PhantomSpec {
            noise_sigma: 0.0,
            illumination: Illumination::default(),
            ..PhantomSpec::standard_tree(2)
        };
        let frames = generate(&spec, 6).unwrap();
        let f = &frames[5];
        for (x, y) in f.truth.centerline_mask.iter_set() {
            assert!(f.image.get(x, y) < spec.background - 0.5 * spec.depth);
        }
    }
}
