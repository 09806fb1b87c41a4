//! Command-line entry point.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error (bad or missing
//! files), 3 internal error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use handpose::commands::{
    cmd_bench, cmd_eval, cmd_recognize, cmd_synth, cmd_track, AppError,
};
use handpose::config::RunConfig;

#[derive(Parser)]
#[command(
    name = "handpose",
    about = "26-DoF hand pose recovery from depth + silhouette observations",
    version
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// Key-value config file applied before other flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Random seed for synthesis and optimization.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for batch evaluation.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Image resolution as WxH, e.g. 160x120.
    #[arg(long, global = true)]
    resolution: Option<String>,
    /// Clamp per-pixel depth differences at d_m instead of d_max.
    #[arg(long, global = true)]
    clamp_at_dm: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Render a pose file into observation files (depth, mask, camera).
    Synth {
        /// Pose file: 26 whitespace-separated values.
        pose: PathBuf,
        /// Output directory.
        #[arg(long, short)]
        out: PathBuf,
        /// Gaussian depth noise sigma, millimeters.
        #[arg(long)]
        depth_sigma: Option<f64>,
        /// Probability a valid depth pixel is dropped.
        #[arg(long)]
        dropout: Option<f64>,
        /// Probability a mask pixel flips.
        #[arg(long)]
        mask_flip: Option<f64>,
    },
    /// Recover the pose behind an observation directory.
    Recognize {
        /// Directory holding observation_{mask,depth}.pgm and observation.cam.
        obs: PathBuf,
        /// Output directory.
        #[arg(long, short)]
        out: PathBuf,
        /// Optional pose file to warm-start the swarm around.
        #[arg(long)]
        warm: Option<PathBuf>,
    },
    /// Score a pose file against an observation and print the breakdown.
    Eval {
        /// Pose file.
        pose: PathBuf,
        /// Observation directory.
        obs: PathBuf,
    },
    /// Time the render and objective phases across worker counts.
    Bench,
    /// Recognize a numbered frame sequence with warm starts.
    Track {
        /// Directory of frame_<k>_{mask,depth}.pgm / frame_<k>.cam trios.
        seq: PathBuf,
        /// Output directory.
        #[arg(long, short)]
        out: PathBuf,
    },
}

fn build_config(g: &GlobalArgs) -> Result<RunConfig, AppError> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &g.config {
        cfg.apply_file(path)?;
    }
    if let Some(seed) = g.seed {
        cfg.seed = seed;
    }
    if let Some(workers) = g.workers {
        if workers == 0 {
            return Err(AppError::Usage("--workers must be at least 1".to_string()));
        }
        cfg.workers = workers;
    }
    if let Some(res) = &g.resolution {
        let (w, h) = res
            .split_once('x')
            .and_then(|(w, h)| Some((w.parse().ok()?, h.parse().ok()?)))
            .filter(|&(w, h): &(u32, u32)| w > 0 && h > 0)
            .ok_or_else(|| {
                AppError::Usage(format!("bad --resolution {res:?}, expected WxH"))
            })?;
        cfg.width = w;
        cfg.height = h;
    }
    if g.clamp_at_dm {
        cfg.cost.clamp_at_dm = true;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), AppError> {
    let mut cfg = build_config(&cli.global)?;
    match cli.command {
        Command::Synth {
            pose,
            out,
            depth_sigma,
            dropout,
            mask_flip,
        } => {
            if let Some(s) = depth_sigma {
                cfg.noise.depth_sigma = s;
            }
            if let Some(p) = dropout {
                cfg.noise.dropout_prob = p;
            }
            if let Some(p) = mask_flip {
                cfg.noise.mask_flip_prob = p;
            }
            if !cfg.noise.is_valid() {
                return Err(AppError::Usage("noise parameters out of range".to_string()));
            }
            cmd_synth(&pose, &out, &cfg)
        }
        Command::Recognize { obs, out, warm } => {
            cmd_recognize(&obs, &out, &cfg, warm.as_deref())
        }
        Command::Eval { pose, obs } => cmd_eval(&pose, &obs, &cfg),
        Command::Bench => cmd_bench(&cfg),
        Command::Track { seq, out } => cmd_track(&seq, &out, &cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are successes, not usage errors.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
