//! Frame and sequence processing, and the file-level driver behind the CLI.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::catheter::{catheter_mask, track_sequence, Poly2, TrackState};
use crate::config::{parse_config, PipelineConfig};
use crate::enhance::{multiscale_tophat, smooth_for_ridges};
use crate::error::{Error, Result};
use crate::imgcore::io::{read_gray, write_mask_pgm, write_pgm, RgbImage};
use crate::imgcore::{ensure_same_dims, BinaryMask, GrayImage};
use crate::phantom::metrics::{catheter_precision, dice};
use crate::ridgedet::{ridge_maps, RidgeMaps};
use crate::segment::{segment_frame, SegmentationResult};
use crate::vesselness::directional_vesselness;

/// Per-frame maps shared by catheter tracking and segmentation.
#[derive(Clone, Debug, PartialEq)]
pub struct Preprocessed {
    pub enhanced: GrayImage,
    /// Vesselness of the raw frame; guides the ridge smoothing.
    pub vesselness_raw: GrayImage,
    pub smoothed: GrayImage,
    pub ridges: RidgeMaps,
    /// Vesselness of the enhanced frame; feeds the superpixel statistics.
    pub vesselness: GrayImage,
}

/// The maps catheter tracking needs: everything up to the ridge maps.
#[derive(Clone, Debug, PartialEq)]
pub struct RidgeStage {
    pub enhanced: GrayImage,
    pub vesselness_raw: GrayImage,
    pub smoothed: GrayImage,
    pub ridges: RidgeMaps,
}

pub fn ridge_stage(img: &GrayImage, cfg: &PipelineConfig) -> Result<RidgeStage> {
    let enhanced = multiscale_tophat(img, &cfg.tophat()?);
    let vesselness_raw =
        directional_vesselness(img, &cfg.bank()?, &cfg.frangi()?, cfg.homomorphic())?;
    let smoothed = smooth_for_ridges(&enhanced, &vesselness_raw, cfg.guided()?)?;
    let ridges = ridge_maps(&smoothed, &cfg.ridges())?;
    Ok(RidgeStage {
        enhanced,
        vesselness_raw,
        smoothed,
        ridges,
    })
}

impl RidgeStage {
    /// Adds the enhanced-image vesselness used by segmentation.
    pub fn complete(self, cfg: &PipelineConfig) -> Result<Preprocessed> {
        let vesselness = directional_vesselness(
            &self.enhanced,
            &cfg.bank()?,
            &cfg.frangi()?,
            cfg.homomorphic(),
        )?;
        Ok(Preprocessed {
            enhanced: self.enhanced,
            vesselness_raw: self.vesselness_raw,
            smoothed: self.smoothed,
            ridges: self.ridges,
            vesselness,
        })
    }
}

pub fn preprocess(img: &GrayImage, cfg: &PipelineConfig) -> Result<Preprocessed> {
    ridge_stage(img, cfg)?.complete(cfg)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrameResult {
    pub segmentation: SegmentationResult,
    /// Segmented arteries with the catheter band removed.
    pub artery_mask: BinaryMask,
    pub centerline_mask: BinaryMask,
    pub catheter: Option<TrackState>,
    pub catheter_mask: Option<BinaryMask>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SequenceResult {
    pub preprocessed: Vec<Preprocessed>,
    pub frames: Vec<FrameResult>,
    pub warnings: Vec<String>,
}

/// Removes a band of `width` pixels around the curve from `mask`.
pub fn subtract_catheter(mask: &BinaryMask, poly: &Poly2, width: usize) -> Result<BinaryMask> {
    mask.and_not(&catheter_mask(poly, width, mask.dims())?)
}

/// Tracks the catheter over the medium-threshold ridge maps. Returns `None`
/// (with a warning when detection fails) for disabled tracking, single
/// frames, or no detectable catheter.
pub fn track_catheter(
    pre: &[Preprocessed],
    cfg: &PipelineConfig,
    warnings: &mut Vec<String>,
) -> Result<Option<Vec<TrackState>>> {
    if !cfg.catheter_enabled || pre.len() < 2 {
        return Ok(None);
    }
    let ridges: Vec<BinaryMask> = pre.iter().map(|p| p.ridges.medium.clone()).collect();
    match track_sequence(&ridges, &cfg.catheter()) {
        Ok(states) => {
            for s in states.iter().filter(|s| s.lost) {
                warnings.push(format!(
                    "frame {}: catheter tracking lost (support {}), keeping previous curve",
                    s.frame_index, s.fit_support
                ));
            }
            Ok(Some(states))
        }
        Err(Error::DetectionFailed(msg)) => {
            warnings.push(format!("catheter not detected in first frame: {msg}"));
            Ok(None)
        }
        Err(Error::FitFailed(msg)) => {
            warnings.push(format!("catheter curve fit failed: {msg}"));
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

pub fn process_sequence(frames: &[GrayImage], cfg: &PipelineConfig) -> Result<SequenceResult> {
    cfg.validate()?;
    let first = frames
        .first()
        .ok_or_else(|| Error::invalid("no frames to process"))?;
    for f in frames {
        ensure_same_dims(first.dims(), f.dims())?;
    }
    let pre: Vec<Preprocessed> = frames
        .iter()
        .map(|f| preprocess(f, cfg))
        .collect::<Result<_>>()?;
    let mut warnings = Vec::new();
    let states = track_catheter(&pre, cfg, &mut warnings)?;
    let seg = cfg.segment();
    let mut out = Vec::with_capacity(frames.len());
    for (i, p) in pre.iter().enumerate() {
        let segmentation = segment_frame(&p.enhanced, &p.vesselness, &p.ridges, &seg)?;
        let state = states.as_ref().map(|s| s[i].clone());
        let (artery, cmask) = match &state {
            Some(s) => (
                subtract_catheter(
                    &segmentation.artery_mask,
                    &s.poly,
                    cfg.catheter_subtract_width,
                )?,
                Some(catheter_mask(
                    &s.poly,
                    cfg.catheter_mask_width,
                    first.dims(),
                )?),
            ),
            None => (segmentation.artery_mask.clone(), None),
        };
        let centerline = segmentation.centerline_mask.and(&artery)?;
        out.push(FrameResult {
            segmentation,
            artery_mask: artery,
            centerline_mask: centerline,
            catheter: state,
            catheter_mask: cmask,
        });
    }
    Ok(SequenceResult {
        preprocessed: pre,
        frames: out,
        warnings,
    })
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub config: PipelineConfig,
    pub input: PathBuf,
    pub out: PathBuf,
    pub ground_truth: Option<PathBuf>,
    pub debug_artifacts: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrameReport {
    pub name: String,
    pub dice: Option<f64>,
    pub catheter_precision: Option<f64>,
    pub catheter_lost: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub frames: Vec<FrameReport>,
    pub warnings: Vec<String>,
}

/// Reads a configuration file; an unreadable file is an input error.
pub fn load_config(path: &Path) -> Result<PipelineConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::Input {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    parse_config(&text)
}

fn is_image(p: &Path) -> bool {
    matches!(
        p.extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .as_deref(),
        Some("pgm" | "pnm" | "png")
    )
}

/// The input file itself, or the image files of a directory sorted by name.
pub fn list_frames(input: &Path) -> Result<Vec<PathBuf>> {
    let err = |message: String| Error::Input {
        path: input.to_path_buf(),
        message,
    };
    let meta = fs::metadata(input).map_err(|e| err(e.to_string()))?;
    if meta.is_file() {
        return Ok(vec![input.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = fs::read_dir(input)
        .map_err(|e| err(e.to_string()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && is_image(p))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(err("directory contains no PGM or PNG frames".into()));
    }
    Ok(files)
}

fn stem(p: &Path) -> String {
    p.file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("frame")
        .to_string()
}

fn read_truth_mask(dir: &Path, name: &str, kind: &str) -> Result<Option<BinaryMask>> {
    let path = dir.join(format!("{name}_{kind}.pgm"));
    if !path.exists() {
        return Ok(None);
    }
    let img = read_gray(&path)?;
    Ok(Some(BinaryMask::threshold(&img, 0.5)))
}

struct Truth {
    vessel: Option<BinaryMask>,
    catheter: Option<BinaryMask>,
}

/// Runs the whole pipeline on files. All inputs are read before anything is
/// written, so an unreadable input leaves the output directory untouched.
pub fn run(opts: &RunOptions) -> Result<RunSummary> {
    let cfg = &opts.config;
    cfg.validate()?;
    let paths = list_frames(&opts.input)?;
    let frames: Vec<GrayImage> = paths.iter().map(|p| read_gray(p)).collect::<Result<_>>()?;
    let names: Vec<String> = paths.iter().map(|p| stem(p)).collect();
    let truths: Vec<Truth> = match &opts.ground_truth {
        Some(dir) => {
            if !dir.is_dir() {
                return Err(Error::Input {
                    path: dir.clone(),
                    message: "ground-truth directory not found".into(),
                });
            }
            names
                .iter()
                .map(|n| {
                    Ok(Truth {
                        vessel: read_truth_mask(dir, n, "vessel")?,
                        catheter: read_truth_mask(dir, n, "catheter")?,
                    })
                })
                .collect::<Result<_>>()?
        }
        None => Vec::new(),
    };

    let result = process_sequence(&frames, cfg)?;

    fs::create_dir_all(&opts.out).map_err(|e| Error::Output {
        path: opts.out.clone(),
        message: e.to_string(),
    })?;
    let mut reports = Vec::with_capacity(frames.len());
    for (i, fr) in result.frames.iter().enumerate() {
        let name = &names[i];
        let out = |suffix: &str| opts.out.join(format!("{name}_{suffix}"));
        write_mask_pgm(&out("artery.pgm"), &fr.artery_mask)?;
        write_mask_pgm(&out("centerline.pgm"), &fr.centerline_mask)?;
        if let Some(m) = &fr.catheter_mask {
            write_mask_pgm(&out("catheter.pgm"), m)?;
        }
        let mut overlay = RgbImage::from_gray(&frames[i]);
        overlay.paint(&fr.artery_mask, [255, 0, 0]);
        if let Some(m) = &fr.catheter_mask {
            overlay.paint(m, [0, 0, 255]);
        }
        overlay.paint(&fr.centerline_mask, [0, 255, 0]);
        overlay.write_png(&out("overlay.png"))?;
        if opts.debug_artifacts {
            write_debug(
                &out,
                &frames[i],
                &result.preprocessed[i],
                &fr.segmentation,
                cfg,
            )?;
        }

        let truth = truths.get(i);
        let dice_v = match truth.and_then(|t| t.vessel.as_ref()) {
            Some(gt) => Some(dice(&fr.artery_mask, gt)?),
            None => None,
        };
        let precision = match (truth.and_then(|t| t.catheter.as_ref()), &fr.catheter) {
            (Some(gt), Some(s)) if !gt.is_empty() => catheter_precision(&s.poly, gt, 2.0).ok(),
            _ => None,
        };
        reports.push(FrameReport {
            name: name.clone(),
            dice: dice_v,
            catheter_precision: precision,
            catheter_lost: fr.catheter.as_ref().is_some_and(|s| s.lost),
        });
    }
    let summary = RunSummary {
        frames: reports,
        warnings: result.warnings,
    };
    let path = opts.out.join("summary.txt");
    fs::write(&path, summary_text(&summary)).map_err(|e| Error::Output {
        path,
        message: e.to_string(),
    })?;
    Ok(summary)
}

fn write_debug(
    out: &dyn Fn(&str) -> PathBuf,
    frame: &GrayImage,
    pre: &Preprocessed,
    seg: &SegmentationResult,
    cfg: &PipelineConfig,
) -> Result<()> {
    write_pgm(&out("enhanced.pgm"), &pre.enhanced)?;
    write_pgm(&out("vesselness_raw.pgm"), &pre.vesselness_raw)?;
    write_pgm(&out("vesselness.pgm"), &pre.vesselness)?;
    write_pgm(&out("smoothed.pgm"), &pre.smoothed.clamp01())?;
    write_mask_pgm(&out("ridge_low.pgm"), &pre.ridges.low)?;
    write_mask_pgm(&out("ridge_medium.pgm"), &pre.ridges.medium)?;
    write_mask_pgm(&out("ridge_high.pgm"), &pre.ridges.high)?;
    for ((k, m), labels) in cfg
        .superpixel_scales
        .iter()
        .zip(&seg.initial_masks)
        .zip(&seg.label_maps)
    {
        write_mask_pgm(&out(&format!("initial_{k}.pgm")), m)?;
        let mut img = RgbImage::from_gray(frame);
        img.paint(&labels.boundaries(), [255, 255, 0]);
        img.write_png(&out(&format!("superpixels_{k}.png")))?;
    }
    write_mask_pgm(&out("voted.pgm"), &seg.voted_mask)?;
    write_mask_pgm(&out("refined.pgm"), &seg.artery_mask)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.4}"))
}

fn mean(v: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}

pub fn summary_text(s: &RunSummary) -> String {
    let mut t = String::from("# frame dice catheter_precision catheter_lost\n");
    for f in &s.frames {
        let _ = writeln!(
            t,
            "{} dice={} catheter_precision={} catheter_lost={}",
            f.name,
            fmt_opt(f.dice),
            fmt_opt(f.catheter_precision),
            f.catheter_lost
        );
    }
    let _ = writeln!(
        t,
        "mean_dice={}",
        fmt_opt(mean(s.frames.iter().filter_map(|f| f.dice)))
    );
    let _ = writeln!(
        t,
        "mean_catheter_precision={}",
        fmt_opt(mean(s.frames.iter().filter_map(|f| f.catheter_precision)))
    );
    for w in &s.warnings {
        let _ = writeln!(t, "warning: {w}");
    }
    t
}
