//! Pipeline configuration as `key = value` text.

use std::fmt::Write as _;

use crate::catheter::{CatheterParams, HoughParams, TrackParams};
use crate::enhance::{GuidedParams, HomomorphicParams, TopHatScales};
use crate::error::{Error, Result};
use crate::ridgedet::RidgeParams;
use crate::segment::{RefineParams, RescueRule, SegmentParams};
use crate::superpix::SlicParams;
use crate::vesselness::{DirectionalBank, FrangiParams};

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub tophat_radii: Vec<usize>,
    pub guided_radius: usize,
    pub guided_eps: f64,
    pub frangi_sigmas: Vec<f64>,
    pub frangi_beta: f64,
    pub frangi_c: f64,
    pub directional_bands: usize,
    pub homomorphic_cutoff: f64,
    pub homomorphic_gain_low: f64,
    pub homomorphic_gain_high: f64,
    pub ridge_sigma: f64,
    pub ridge_t_low: f64,
    pub ridge_t_medium: f64,
    pub ridge_t_high: f64,
    pub superpixel_scales: [usize; 3],
    pub superpixel_t: f64,
    pub slic_m: f64,
    pub slic_max_iter: usize,
    pub slic_conv_tol: f64,
    pub refine_t_d: f64,
    pub refine_d: usize,
    pub boundary_thresholds: Vec<f64>,
    pub profile_smooth_width: usize,
    pub rescue: RescueRule,
    pub catheter_enabled: bool,
    pub catheter_top_n: usize,
    pub catheter_window: (f64, f64, f64),
    pub catheter_grid: (usize, usize, usize),
    pub catheter_tolerance: f64,
    pub catheter_min_support: usize,
    /// Width of the written catheter mask.
    pub catheter_mask_width: usize,
    /// Width of the band removed from the artery mask around the catheter.
    pub catheter_subtract_width: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            tophat_radii: (3..=19).step_by(2).collect(),
            guided_radius: 8,
            guided_eps: 0.2,
            frangi_sigmas: vec![1.0, 2.0, 3.0, 4.0, 6.0, 8.0],
            frangi_beta: 0.5,
            frangi_c: 0.08,
            directional_bands: 8,
            homomorphic_cutoff: HomomorphicParams::default().cutoff,
            homomorphic_gain_low: HomomorphicParams::default().gain_low,
            homomorphic_gain_high: HomomorphicParams::default().gain_high,
            ridge_sigma: 2.0,
            ridge_t_low: 0.2,
            ridge_t_medium: 0.25,
            ridge_t_high: 0.4,
            superpixel_scales: [2000, 3000, 4000],
            superpixel_t: 0.5,
            slic_m: 0.1,
            slic_max_iter: 10,
            slic_conv_tol: 0.25,
            refine_t_d: 0.2,
            refine_d: 25,
            boundary_thresholds: vec![0.2, 0.1, 0.05, 0.02, 0.0],
            profile_smooth_width: 3,
            rescue: RescueRule::Vesselness,
            catheter_enabled: true,
            catheter_top_n: 10,
            catheter_window: (5e-4, 0.1, 10.0),
            catheter_grid: (11, 11, 21),
            catheter_tolerance: 1.0,
            catheter_min_support: 30,
            catheter_mask_width: 3,
            catheter_subtract_width: 9,
        }
    }
}

fn list<T: std::fmt::Display>(v: &[T]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn rescue_name(r: RescueRule) -> &'static str {
    match r {
        RescueRule::Vesselness => "vesselness",
        RescueRule::Intensity => "intensity",
        RescueRule::Off => "off",
    }
}

impl PipelineConfig {
    pub fn tophat(&self) -> Result<TopHatScales> {
        TopHatScales::new(self.tophat_radii.clone())
    }

    pub fn guided(&self) -> Result<GuidedParams> {
        GuidedParams::new(self.guided_radius, self.guided_eps)
    }

    pub fn frangi(&self) -> Result<FrangiParams> {
        FrangiParams::new(self.frangi_sigmas.clone(), self.frangi_beta, self.frangi_c)
    }

    pub fn bank(&self) -> Result<DirectionalBank> {
        DirectionalBank::new(self.directional_bands)
    }

    pub fn homomorphic(&self) -> HomomorphicParams {
        HomomorphicParams {
            cutoff: self.homomorphic_cutoff,
            gain_low: self.homomorphic_gain_low,
            gain_high: self.homomorphic_gain_high,
        }
    }

    pub fn ridges(&self) -> RidgeParams {
        RidgeParams {
            sigma: self.ridge_sigma,
            t_low: self.ridge_t_low,
            t_medium: self.ridge_t_medium,
            t_high: self.ridge_t_high,
        }
    }

    pub fn segment(&self) -> SegmentParams {
        SegmentParams {
            scales: self.superpixel_scales,
            threshold: self.superpixel_t,
            slic: SlicParams {
                k: self.superpixel_scales[0],
                m: self.slic_m,
                max_iter: self.slic_max_iter,
                conv_tol: self.slic_conv_tol,
            },
            refine: RefineParams {
                d: self.refine_d,
                t_d: self.refine_t_d,
                boundary_thresholds: self.boundary_thresholds.clone(),
                profile_smooth_width: self.profile_smooth_width,
                rescue: self.rescue,
            },
        }
    }

    pub fn catheter(&self) -> CatheterParams {
        CatheterParams {
            top_n: self.catheter_top_n,
            hough: HoughParams::default(),
            track: TrackParams {
                search_window: self.catheter_window,
                grid: self.catheter_grid,
                tolerance: self.catheter_tolerance,
                min_support: self.catheter_min_support,
                ..TrackParams::default()
            },
        }
    }

    /// Checks every cross-field constraint the parser cannot see line by line.
    pub fn validate(&self) -> Result<()> {
        self.tophat()?;
        self.guided()?;
        self.frangi()?;
        self.bank()?;
        self.segment().refine.validate()?;
        self.catheter().track.validate()?;
        if !(self.ridge_t_low <= self.ridge_t_medium && self.ridge_t_medium <= self.ridge_t_high) {
            return Err(Error::invalid(
                "ridge thresholds must satisfy low <= medium <= high",
            ));
        }
        Ok(())
    }

    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("tophat_radii", list(&self.tophat_radii));
        kv("guided_radius", self.guided_radius.to_string());
        kv("guided_eps", self.guided_eps.to_string());
        kv("frangi_sigmas", list(&self.frangi_sigmas));
        kv("frangi_beta", self.frangi_beta.to_string());
        kv("frangi_c", self.frangi_c.to_string());
        kv("directional_bands", self.directional_bands.to_string());
        kv("homomorphic_cutoff", self.homomorphic_cutoff.to_string());
        kv(
            "homomorphic_gain_low",
            self.homomorphic_gain_low.to_string(),
        );
        kv(
            "homomorphic_gain_high",
            self.homomorphic_gain_high.to_string(),
        );
        kv("ridge_sigma", self.ridge_sigma.to_string());
        kv("ridge_t_low", self.ridge_t_low.to_string());
        kv("ridge_t_medium", self.ridge_t_medium.to_string());
        kv("ridge_t_high", self.ridge_t_high.to_string());
        kv("superpixel_scales", list(&self.superpixel_scales));
        kv("superpixel_t", self.superpixel_t.to_string());
        kv("slic_m", self.slic_m.to_string());
        kv("slic_max_iter", self.slic_max_iter.to_string());
        kv("slic_conv_tol", self.slic_conv_tol.to_string());
        kv("refine_t_d", self.refine_t_d.to_string());
        kv("refine_d", self.refine_d.to_string());
        kv("boundary_thresholds", list(&self.boundary_thresholds));
        kv(
            "profile_smooth_width",
            self.profile_smooth_width.to_string(),
        );
        kv("rescue", rescue_name(self.rescue).to_string());
        kv("catheter_enabled", self.catheter_enabled.to_string());
        kv("catheter_top_n", self.catheter_top_n.to_string());
        let (a, b, c) = self.catheter_window;
        kv("catheter_window", format!("{a} {b} {c}"));
        let (a, b, c) = self.catheter_grid;
        kv("catheter_grid", format!("{a} {b} {c}"));
        kv("catheter_tolerance", self.catheter_tolerance.to_string());
        kv(
            "catheter_min_support",
            self.catheter_min_support.to_string(),
        );
        kv("catheter_mask_width", self.catheter_mask_width.to_string());
        kv(
            "catheter_subtract_width",
            self.catheter_subtract_width.to_string(),
        );
        s
    }
}

struct Line<'a> {
    no: usize,
    value: &'a str,
}

impl Line<'_> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::Config {
            line: self.no,
            message: message.into(),
        }
    }

    fn f64(&self) -> Result<f64> {
        parse_f64(self.value).ok_or_else(|| self.err(format!("'{}' is not a number", self.value)))
    }

    fn unit(&self) -> Result<f64> {
        let v = self.f64()?;
        if !(v > 0.0 && v < 1.0) {
            return Err(self.err(format!("{v} is outside (0, 1)")));
        }
        Ok(v)
    }

    fn positive(&self) -> Result<f64> {
        let v = self.f64()?;
        if !(v > 0.0) {
            return Err(self.err(format!("{v} must be positive")));
        }
        Ok(v)
    }

    fn usize(&self) -> Result<usize> {
        self.value
            .parse()
            .map_err(|_| self.err(format!("'{}' is not a non-negative integer", self.value)))
    }

    fn count(&self) -> Result<usize> {
        let v = self.usize()?;
        if v == 0 {
            return Err(self.err("must be at least 1"));
        }
        Ok(v)
    }

    fn f64s(&self) -> Result<Vec<f64>> {
        let v: Option<Vec<f64>> = self.value.split_whitespace().map(parse_f64).collect();
        match v {
            Some(v) if !v.is_empty() => Ok(v),
            _ => Err(self.err(format!("'{}' is not a list of numbers", self.value))),
        }
    }

    fn usizes(&self) -> Result<Vec<usize>> {
        let v: std::result::Result<Vec<usize>, _> =
            self.value.split_whitespace().map(str::parse).collect();
        match v {
            Ok(v) if !v.is_empty() => Ok(v),
            _ => Err(self.err(format!("'{}' is not a list of integers", self.value))),
        }
    }

    fn triple<T: Copy>(&self, v: Vec<T>) -> Result<(T, T, T)> {
        match v[..] {
            [a, b, c] => Ok((a, b, c)),
            _ => Err(self.err(format!("expected 3 values, got {}", v.len()))),
        }
    }

    fn bool(&self) -> Result<bool> {
        match self.value {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            v => Err(self.err(format!("'{v}' is not a boolean"))),
        }
    }
}

fn parse_f64(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Parses configuration text. Blank lines and `#` comments are ignored;
/// omitted keys keep their defaults; unknown keys are rejected.
pub fn parse_config(text: &str) -> Result<PipelineConfig> {
    let mut c = PipelineConfig::default();
    let mut last_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let no = idx + 1;
        last_line = no;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, value) = body.split_once('=').ok_or_else(|| Error::Config {
            line: no,
            message: format!("expected key = value, got '{body}'"),
        })?;
        let l = Line {
            no,
            value: value.trim(),
        };
        match key.trim() {
            "tophat_radii" => c.tophat_radii = l.usizes()?,
            "guided_radius" => c.guided_radius = l.count()?,
            "guided_eps" => c.guided_eps = l.positive()?,
            "frangi_sigmas" => c.frangi_sigmas = l.f64s()?,
            "frangi_beta" => c.frangi_beta = l.positive()?,
            "frangi_c" => c.frangi_c = l.positive()?,
            "directional_bands" => c.directional_bands = l.count()?,
            "homomorphic_cutoff" => c.homomorphic_cutoff = l.positive()?,
            "homomorphic_gain_low" => c.homomorphic_gain_low = l.positive()?,
            "homomorphic_gain_high" => c.homomorphic_gain_high = l.positive()?,
            "ridge_sigma" => c.ridge_sigma = l.positive()?,
            "ridge_t_low" => c.ridge_t_low = l.unit()?,
            "ridge_t_medium" => c.ridge_t_medium = l.unit()?,
            "ridge_t_high" => c.ridge_t_high = l.unit()?,
            "superpixel_scales" => {
                let v = l.usizes()?;
                let (a, b, d) = l.triple(v)?;
                if a == 0 || b == 0 || d == 0 {
                    return Err(l.err("superpixel counts must be at least 1"));
                }
                c.superpixel_scales = [a, b, d];
            }
            "superpixel_t" => c.superpixel_t = l.unit()?,
            "slic_m" => c.slic_m = l.positive()?,
            "slic_max_iter" => c.slic_max_iter = l.count()?,
            "slic_conv_tol" => c.slic_conv_tol = l.positive()?,
            "refine_t_d" => c.refine_t_d = l.unit()?,
            "refine_d" => {
                let d = l.usize()?;
                if d < 3 {
                    return Err(l.err("profile diameter must be at least 3"));
                }
                c.refine_d = d;
            }
            "boundary_thresholds" => {
                let v = l.f64s()?;
                if v.windows(2).any(|w| w[1] >= w[0]) || v.iter().any(|&t| !(0.0..1.0).contains(&t))
                {
                    return Err(l.err("thresholds must be strictly descending within [0, 1)"));
                }
                c.boundary_thresholds = v;
            }
            "profile_smooth_width" => c.profile_smooth_width = l.count()?,
            "rescue" => {
                c.rescue = match l.value {
                    "vesselness" => RescueRule::Vesselness,
                    "intensity" => RescueRule::Intensity,
                    "off" => RescueRule::Off,
                    v => return Err(l.err(format!("unknown rescue rule '{v}'"))),
                }
            }
            "catheter_enabled" => c.catheter_enabled = l.bool()?,
            "catheter_top_n" => c.catheter_top_n = l.count()?,
            "catheter_window" => {
                let v = l.f64s()?;
                let t = l.triple(v)?;
                if !(t.0 > 0.0 && t.1 > 0.0 && t.2 > 0.0) {
                    return Err(l.err("search half-widths must be positive"));
                }
                c.catheter_window = t;
            }
            "catheter_grid" => {
                let v = l.usizes()?;
                let t = l.triple(v)?;
                if t.0 == 0 || t.1 == 0 || t.2 == 0 {
                    return Err(l.err("grid sizes must be at least 1"));
                }
                c.catheter_grid = t;
            }
            "catheter_tolerance" => c.catheter_tolerance = l.positive()?,
            "catheter_min_support" => c.catheter_min_support = l.usize()?,
            "catheter_mask_width" => c.catheter_mask_width = l.count()?,
            "catheter_subtract_width" => c.catheter_subtract_width = l.count()?,
            other => {
                return Err(Error::Config {
                    line: no,
                    message: format!("unknown key '{other}'"),
                })
            }
        }
    }
    c.validate().map_err(|e| Error::Config {
        line: last_line,
        message: e.to_string(),
    })?;
    Ok(c)
}
