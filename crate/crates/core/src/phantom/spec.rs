use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::catheter::{Axis, Poly2};
use crate::error::{Error, Result};

/// Cubic Bezier vessel axis with a constant radius.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VesselSegment {
    pub control: [(f64, f64); 4],
    pub radius: f64,
}

impl VesselSegment {
    pub fn line(a: (f64, f64), b: (f64, f64), radius: f64) -> Self {
        let lerp = |t: f64| (a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1));
        Self {
            control: [a, lerp(1.0 / 3.0), lerp(2.0 / 3.0), b],
            radius,
        }
    }

    pub fn point(&self, t: f64) -> (f64, f64) {
        let [p0, p1, p2, p3] = self.control;
        let u = 1.0 - t;
        let (b0, b1, b2, b3) = (u * u * u, 3.0 * u * u * t, 3.0 * u * t * t, t * t * t);
        (
            b0 * p0.0 + b1 * p1.0 + b2 * p2.0 + b3 * p3.0,
            b0 * p0.1 + b1 * p1.1 + b2 * p2.1 + b3 * p3.1,
        )
    }

    /// Axis sampled finely enough that consecutive points are under half a
    /// pixel apart.
    pub fn polyline(&self) -> Vec<(f64, f64)> {
        let c = self.control;
        let hull: f64 = c
            .windows(2)
            .map(|w| ((w[1].0 - w[0].0).powi(2) + (w[1].1 - w[0].1).powi(2)).sqrt())
            .sum();
        let n = ((hull * 2.0).ceil() as usize).max(1);
        (0..=n).map(|i| self.point(i as f64 / n as f64)).collect()
    }
}

/// Multiplicative gain `1 + gx*u + gy*v + quad*(u^2 + v^2)/2` with `u, v`
/// running from -1 to 1 across the frame.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Illumination {
    pub gx: f64,
    pub gy: f64,
    pub quad: f64,
}

impl Illumination {
    pub fn factor(&self, x: usize, y: usize, w: usize, h: usize) -> f64 {
        let norm = |i: usize, n: usize| {
            if n > 1 {
                2.0 * i as f64 / (n - 1) as f64 - 1.0
            } else {
                0.0
            }
        };
        let (u, v) = (norm(x, w), norm(y, h));
        1.0 + self.gx * u + self.gy * v + self.quad * (u * u + v * v) / 2.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CatheterSpec {
    pub poly: Poly2,
    pub radius: f64,
    pub depth: f64,
    /// Coefficient change `(da, db, dc)` per frame.
    pub drift: (f64, f64, f64),
}

impl CatheterSpec {
    pub fn at_frame(&self, f: usize) -> Poly2 {
        let k = f as f64;
        let p = self.poly;
        p.with_coefficients(
            p.a + k * self.drift.0,
            p.b + k * self.drift.1,
            p.c + k * self.drift.2,
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhantomSpec {
    pub width: usize,
    pub height: usize,
    pub background: f64,
    /// Full-injection intensity drop at a vessel axis.
    pub depth: f64,
    pub vessels: Vec<VesselSegment>,
    pub catheter: Option<CatheterSpec>,
    pub illumination: Illumination,
    pub noise_sigma: f64,
    pub seed: u64,
    /// Last frame index without contrast; vessel depth ramps up after it.
    pub injection_start: usize,
    /// Frames from no contrast to full contrast.
    pub injection_ramp: usize,
}

fn jitter(rng: &mut ChaCha8Rng, p: (f64, f64), amount: f64) -> (f64, f64) {
    (
        p.0 + rng.random_range(-amount..=amount),
        p.1 + rng.random_range(-amount..=amount),
    )
}

impl PhantomSpec {
    /// Y-shaped tree on a 512x512 frame: a trunk from the top edge that
    /// bifurcates into two branches, plus a thin side branch. Control points
    /// are jittered by the seed. Illumination gradient and noise included.
    pub fn standard_tree(seed: u64) -> Self {
        Self::tree_of_size(512, seed)
    }

    pub fn tree_of_size(size: usize, seed: u64) -> Self {
        let s = size as f64;
        let k = s / 512.0;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_7eee);
        let j = 0.04 * s;
        let at = |fx: f64, fy: f64, rng: &mut ChaCha8Rng| jitter(rng, (fx * s, fy * s), j);
        let top = (rng.random_range(0.38..0.48) * s, 0.0);
        let bif = at(0.48, 0.45, &mut rng);
        let trunk = VesselSegment {
            control: [top, at(0.40, 0.15, &mut rng), at(0.52, 0.30, &mut rng), bif],
            radius: 4.5 * k,
        };
        let left = VesselSegment {
            control: [
                bif,
                at(0.40, 0.55, &mut rng),
                at(0.30, 0.75, &mut rng),
                at(0.18, 0.95, &mut rng),
            ],
            radius: 3.5 * k,
        };
        let right = VesselSegment {
            control: [
                bif,
                at(0.60, 0.55, &mut rng),
                at(0.70, 0.72, &mut rng),
                at(0.85, 0.92, &mut rng),
            ],
            radius: 3.5 * k,
        };
        let root = right.point(0.35);
        let side = VesselSegment {
            control: [
                root,
                at(0.70, 0.50, &mut rng),
                at(0.80, 0.42, &mut rng),
                at(0.92, 0.35, &mut rng),
            ],
            radius: 2.5 * k,
        };
        Self {
            width: size,
            height: size,
            background: 0.7,
            depth: 0.35,
            vessels: vec![trunk, left, right, side],
            catheter: None,
            illumination: Illumination {
                gx: 0.08,
                gy: -0.05,
                quad: -0.05,
            },
            noise_sigma: 0.02,
            seed,
            injection_start: 0,
            injection_ramp: 4,
        }
    }

    /// 256x256 sequence with a drifting catheter and a vessel tree that
    /// starts to fill from the fourth frame.
    pub fn catheter_sequence(seed: u64) -> Self {
        let size = 256;
        let s = size as f64;
        let mut spec = Self::tree_of_size(size, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xca7e_7e12);
        let (x0, x1) = (0.03 * s, 0.97 * s);
        let xm = 0.5 * (x0 + x1);
        let y0 = rng.random_range(0.25..0.45) * s;
        let ym = rng.random_range(0.30..0.50) * s;
        let y1 = rng.random_range(0.25..0.45) * s;
        // Quadratic through the three points.
        let a = ((y1 - ym) / (x1 - xm) - (ym - y0) / (xm - x0)) / (x1 - x0);
        let b = (ym - y0) / (xm - x0) - a * (x0 + xm);
        let c = y0 - a * x0 * x0 - b * x0;
        spec.catheter = Some(CatheterSpec {
            poly: Poly2 {
                a,
                b,
                c,
                axis: Axis::X,
                domain: (x0, x1),
            },
            radius: 2.0,
            depth: 0.35,
            drift: (
                rng.random_range(-1e-5..1e-5),
                rng.random_range(-0.005..0.005),
                rng.random_range(-1.0..1.0),
            ),
        });
        spec.injection_start = 2;
        spec
    }

    pub fn injection_scale(&self, frame: usize) -> f64 {
        let ramp = self.injection_ramp.max(1) as f64;
        ((frame as f64 - self.injection_start as f64) / ramp).clamp(0.0, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::invalid("phantom size must be at least 1x1"));
        }
        if !(self.depth > 0.0 && self.depth < 1.0) {
            return Err(Error::invalid("vessel depth must be in (0, 1)"));
        }
        if !(0.0..=1.0).contains(&self.background) {
            return Err(Error::invalid("background must be in [0, 1]"));
        }
        if self.vessels.iter().any(|v| !(v.radius >= 1.0)) {
            return Err(Error::invalid("vessel radii must be at least 1"));
        }
        if let Some(c) = &self.catheter {
            if !(c.radius >= 1.0) || !(c.depth > 0.0 && c.depth < 1.0) {
                return Err(Error::invalid(
                    "catheter radius must be >= 1 and depth in (0, 1)",
                ));
            }
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::invalid("noise sigma must be non-negative"));
        }
        Ok(())
    }

    /// Parses `key = value` lines; `#` starts a comment. A `preset` line
    /// (`standard_tree` or `catheter_sequence`) chooses the starting spec,
    /// seeded by the `seed` key; other keys override it. `vessel` lines
    /// replace the preset's tree.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Config {
                line: line_no,
                message: format!("expected key = value, got '{line}'"),
            })?;
            entries.push((line_no, k.trim().to_string(), v.trim().to_string()));
        }
        let err = |line: usize, message: String| Error::Config { line, message };
        let num = |line: usize, v: &str| -> Result<f64> {
            v.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| err(line, format!("'{v}' is not a number")))
        };
        let nums = |line: usize, v: &str, n: usize| -> Result<Vec<f64>> {
            let parts: Vec<&str> = v.split_whitespace().collect();
            if parts.len() != n {
                return Err(err(
                    line,
                    format!("expected {n} numbers, got {}", parts.len()),
                ));
            }
            parts.iter().map(|p| num(line, p)).collect()
        };
        let uint = |line: usize, v: &str| -> Result<usize> {
            v.parse::<usize>()
                .map_err(|_| err(line, format!("'{v}' is not a non-negative integer")))
        };

        let seed = match entries.iter().find(|e| e.1 == "seed") {
            Some((l, _, v)) => v
                .parse::<u64>()
                .map_err(|_| err(*l, format!("'{v}' is not a valid seed")))?,
            None => 0,
        };
        let mut spec = match entries.iter().find(|e| e.1 == "preset") {
            Some((_, _, v)) if v == "standard_tree" => Self::standard_tree(seed),
            Some((_, _, v)) if v == "catheter_sequence" => Self::catheter_sequence(seed),
            Some((l, _, v)) => return Err(err(*l, format!("unknown preset '{v}'"))),
            None => Self {
                vessels: Vec::new(),
                ..Self::standard_tree(seed)
            },
        };
        spec.seed = seed;
        let mut vessels = Vec::new();
        for (l, k, v) in &entries {
            let l = *l;
            match k.as_str() {
                "preset" | "seed" => {}
                "width" => spec.width = uint(l, v)?,
                "height" => spec.height = uint(l, v)?,
                "background" => spec.background = num(l, v)?,
                "depth" => spec.depth = num(l, v)?,
                "noise_sigma" => spec.noise_sigma = num(l, v)?,
                "illum_gx" => spec.illumination.gx = num(l, v)?,
                "illum_gy" => spec.illumination.gy = num(l, v)?,
                "illum_quad" => spec.illumination.quad = num(l, v)?,
                "injection_start" => spec.injection_start = uint(l, v)?,
                "injection_ramp" => spec.injection_ramp = uint(l, v)?,
                "vessel" => {
                    let n = nums(l, v, 9)?;
                    vessels.push(VesselSegment {
                        control: [(n[0], n[1]), (n[2], n[3]), (n[4], n[5]), (n[6], n[7])],
                        radius: n[8],
                    });
                }
                "catheter" => {
                    let parts: Vec<&str> = v.split_whitespace().collect();
                    if parts.len() != 8 {
                        return Err(err(
                            l,
                            "catheter needs: a b c axis lo hi radius depth".into(),
                        ));
                    }
                    let axis = match parts[3] {
                        "x" => Axis::X,
                        "y" => Axis::Y,
                        other => return Err(err(l, format!("axis must be x or y, got '{other}'"))),
                    };
                    let f = |i: usize| num(l, parts[i]);
                    let drift = spec.catheter.map_or((0.0, 0.0, 0.0), |c| c.drift);
                    spec.catheter = Some(CatheterSpec {
                        poly: Poly2::new(f(0)?, f(1)?, f(2)?, axis, (f(4)?, f(5)?))
                            .map_err(|e| err(l, e.to_string()))?,
                        radius: f(6)?,
                        depth: f(7)?,
                        drift,
                    });
                }
                "catheter_drift" => {
                    let n = nums(l, v, 3)?;
                    match spec.catheter.as_mut() {
                        Some(c) => c.drift = (n[0], n[1], n[2]),
                        None => return Err(err(l, "catheter_drift given before catheter".into())),
                    }
                }
                "no_catheter" => {
                    if v == "true" {
                        spec.catheter = None;
                    }
                }
                other => return Err(err(l, format!("unknown key '{other}'"))),
            }
        }
        if !vessels.is_empty() {
            spec.vessels = vessels;
        }
        spec.validate()?;
        Ok(spec)
    }

    /// Text form accepted by [`PhantomSpec::parse`].
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "width = {}", self.width);
        let _ = writeln!(s, "height = {}", self.height);
        let _ = writeln!(s, "background = {}", self.background);
        let _ = writeln!(s, "depth = {}", self.depth);
        let _ = writeln!(s, "noise_sigma = {}", self.noise_sigma);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "illum_gx = {}", self.illumination.gx);
        let _ = writeln!(s, "illum_gy = {}", self.illumination.gy);
        let _ = writeln!(s, "illum_quad = {}", self.illumination.quad);
        let _ = writeln!(s, "injection_start = {}", self.injection_start);
        let _ = writeln!(s, "injection_ramp = {}", self.injection_ramp);
        for v in &self.vessels {
            let c = v.control;
            let _ = writeln!(
                s,
                "vessel = {} {} {} {} {} {} {} {} {}",
                c[0].0, c[0].1, c[1].0, c[1].1, c[2].0, c[2].1, c[3].0, c[3].1, v.radius
            );
        }
        if let Some(c) = &self.catheter {
            let p = c.poly;
            let axis = match p.axis {
                Axis::X => "x",
                Axis::Y => "y",
            };
            let _ = writeln!(
                s,
                "catheter = {} {} {} {} {} {} {} {}",
                p.a, p.b, p.c, axis, p.domain.0, p.domain.1, c.radius, c.depth
            );
            let _ = writeln!(
                s,
                "catheter_drift = {} {} {}",
                c.drift.0, c.drift.1, c.drift.2
            );
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trip() {
        for spec in [
            PhantomSpec::standard_tree(3),
            PhantomSpec::catheter_sequence(4),
        ] {
            let back = PhantomSpec::parse(&spec.to_config_string()).unwrap();
            assert_eq!(back, spec);
        }
    }

    #[test]
    fn preset_with_overrides() {
        let spec =
            PhantomSpec::parse("preset = standard_tree\nseed = 7\nnoise_sigma = 0 # clean\n")
                .unwrap();
        assert_eq!(spec.noise_sigma, 0.0);
        assert_eq!(spec.vessels, PhantomSpec::standard_tree(7).vessels);
    }

    #[test]
    fn parse_errors_carry_line() {
        let e = PhantomSpec::parse("width = 64\nbogus = 1\n").unwrap_err();
        assert!(matches!(e, Error::Config { line: 2, .. }));
        let e = PhantomSpec::parse("\n\nvessel = 1 2 3\n").unwrap_err();
        assert!(matches!(e, Error::Config { line: 3, .. }));
        assert!(PhantomSpec::parse("depth = 1.5").is_err());
    }
}
