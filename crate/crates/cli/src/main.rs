use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use angioseg::imgcore::io::{write_mask_pgm, write_pgm};
use angioseg::phantom::{generate, PhantomSpec};
use angioseg::pipeline::{load_config, run, summary_text, RunOptions};
use angioseg::{Error, Result};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "angioseg",
    version,
    about = "Coronary artery segmentation and catheter tracking for X-ray angiograms"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Segment a frame or a sequence directory.
    Run {
        /// Pipeline configuration (key = value lines).
        #[arg(long)]
        config: PathBuf,
        /// A PGM/PNG frame, or a directory of frames processed in name order.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Skip catheter detection and tracking.
        #[arg(long)]
        no_catheter: bool,
        /// Directory with `<frame>_vessel.pgm` / `<frame>_catheter.pgm` masks.
        #[arg(long)]
        ground_truth: Option<PathBuf>,
        /// Also write intermediate maps for every frame.
        #[arg(long)]
        debug_artifacts: bool,
    },
    /// Write a synthetic angiogram sequence with ground-truth masks.
    Phantom {
        /// Phantom description; overrides --preset and --seed.
        #[arg(long, conflicts_with_all = ["preset", "seed"])]
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "standard")]
        preset: Preset,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        frames: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    /// 512x512 vessel tree with an illumination gradient.
    Standard,
    /// 256x256 drifting catheter; vessels fill from the fourth frame.
    Catheter,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Input { .. } => 2,
        Error::Config { .. } => 3,
        _ => 1,
    }
}

fn write_err(path: &Path, e: std::io::Error) -> Error {
    Error::Output {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn phantom(spec: &PhantomSpec, n_frames: usize, out: &Path) -> Result<()> {
    if n_frames == 0 {
        return Err(Error::InvalidArgument("--frames must be at least 1".into()));
    }
    let frames = generate(spec, n_frames)?;
    let frame_dir = out.join("frames");
    let truth_dir = out.join("truth");
    for dir in [&frame_dir, &truth_dir] {
        fs::create_dir_all(dir).map_err(|e| write_err(dir, e))?;
    }
    for (i, f) in frames.iter().enumerate() {
        let name = format!("frame_{i:03}");
        write_pgm(&frame_dir.join(format!("{name}.pgm")), &f.image)?;
        write_mask_pgm(
            &truth_dir.join(format!("{name}_vessel.pgm")),
            &f.truth.vessel_mask,
        )?;
        write_mask_pgm(
            &truth_dir.join(format!("{name}_centerline.pgm")),
            &f.truth.centerline_mask,
        )?;
        write_mask_pgm(
            &truth_dir.join(format!("{name}_catheter.pgm")),
            &f.truth.catheter_mask,
        )?;
    }
    let path = out.join("phantom.txt");
    fs::write(&path, spec.to_config_string()).map_err(|e| write_err(&path, e))
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            input,
            out,
            no_catheter,
            ground_truth,
            debug_artifacts,
        } => {
            let mut cfg = load_config(&config)?;
            if no_catheter {
                cfg.catheter_enabled = false;
            }
            let summary = run(&RunOptions {
                config: cfg,
                input,
                out,
                ground_truth,
                debug_artifacts,
            })?;
            for w in &summary.warnings {
                eprintln!("warning: {w}");
            }
            print!("{}", summary_text(&summary));
            Ok(())
        }
        Command::Phantom {
            config,
            preset,
            seed,
            frames,
            out,
        } => {
            let spec = match config {
                Some(path) => {
                    let text = fs::read_to_string(&path).map_err(|e| Error::Input {
                        path: path.clone(),
                        message: e.to_string(),
                    })?;
                    PhantomSpec::parse(&text)?
                }
                None => match preset {
                    Preset::Standard => PhantomSpec::standard_tree(seed),
                    Preset::Catheter => PhantomSpec::catheter_sequence(seed),
                },
            };
            phantom(&spec, frames, &out)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
