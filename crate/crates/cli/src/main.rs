//! `kfx`: train the frame autoencoder, extract keyframes, score them, and
//! generate synthetic test sequences.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use keyframe_core::distances::Metric;

#[derive(Debug, Parser)]
#[command(
    name = "kfx",
    version,
    about = "Autoencoder + k-means keyframe extraction"
)]
#[command(
    after_help = "Exit codes: 0 success, 1 runtime failure, 2 usage error.\n\
Modelling choices not fixed by the method description (layer widths, attention \
form, thresholds, file formats) are listed under \"Design choices\" in the README."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train an autoencoder on a frame directory.
    Train(TrainArgs),
    /// Select keyframes with a trained model.
    Extract(ExtractArgs),
    /// Score a keyframe report against interval ground truth.
    Eval(EvalArgs),
    /// Write a synthetic multi-scene sequence and its ground truth.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Directory of frame_NNNNNN.png / .ppm files.
    #[arg(long)]
    pub frames: PathBuf,
    /// Output model file.
    #[arg(long)]
    pub out: PathBuf,
    /// Training log JSON [default: model path with extension .log.json].
    #[arg(long)]
    pub log: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u64).range(1..))]
    pub epochs: u64,
    #[arg(long, default_value_t = 32, value_parser = clap::value_parser!(u64).range(1..))]
    pub batch_size: u64,
    /// Adam learning rate.
    #[arg(long, default_value_t = 1e-3, value_parser = parse_lr)]
    pub lr: f64,
    /// Hold out every Nth frame for validation; 0 disables validation.
    #[arg(long, default_value_t = 10, value_parser = parse_stride)]
    pub validation_stride: usize,
    /// Stop after this many epochs without improvement; 0 disables early stopping.
    #[arg(long, default_value_t = 5)]
    pub patience: usize,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(long)]
    pub frames: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    /// Number of keyframes.
    #[arg(short = 'k', value_parser = clap::value_parser!(u64).range(1..))]
    pub k: u64,
    /// Cluster count is ceil(oversample * k) before deduplication.
    #[arg(long, default_value_t = 1.5, value_parser = parse_oversample)]
    pub oversample: f64,
    /// Latent distance for selection and deduplication: euclidean, manhattan or cosine.
    #[arg(long, default_value = "euclidean", value_parser = parse_metric)]
    pub metric: Metric,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// k-means restarts; the lowest inertia wins.
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u64).range(1..))]
    pub restarts: u64,
    /// Output report JSON.
    #[arg(long)]
    pub out: PathBuf,
    /// Optional contact sheet PNG of the keyframes.
    #[arg(long)]
    pub sheet: Option<PathBuf>,
    /// Contact sheet columns.
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..))]
    pub sheet_cols: u64,
    /// Copy the keyframe images into this directory.
    #[arg(long)]
    pub save_frames: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Keyframe report from `extract`.
    #[arg(long, required_unless_present = "confusion", requires = "truth")]
    pub report: Option<PathBuf>,
    /// Ground-truth interval JSON.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Score raw counts instead of a report: tp,fp,fn,tn.
    #[arg(long, conflicts_with = "report", value_parser = parse_confusion)]
    pub confusion: Option<[u64; 4]>,
    /// Output score JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub scenes: u64,
    #[arg(long, default_value_t = 40, value_parser = clap::value_parser!(u64).range(1..))]
    pub frames_per_scene: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output frame directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
    /// Ground-truth interval JSON.
    #[arg(long)]
    pub truth: PathBuf,
    /// Parameter manifest [default: <out>/manifest.json].
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

fn parse_metric(s: &str) -> Result<Metric, String> {
    s.parse().map_err(|e: keyframe_core::Error| e.to_string())
}

fn parse_oversample(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v.is_finite() && v >= 1.0 {
        Ok(v)
    } else {
        Err("must be a finite number >= 1".into())
    }
}

fn parse_lr(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err("must be a finite number >= 0".into())
    }
}

fn parse_stride(s: &str) -> Result<usize, String> {
    let v: usize = s.parse().map_err(|e| format!("{e}"))?;
    if v == 1 {
        Err("must be 0 (no validation) or at least 2".into())
    } else {
        Ok(v)
    }
}

fn parse_confusion(s: &str) -> Result<[u64; 4], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err("expected four comma-separated counts: tp,fp,fn,tn".into());
    }
    let mut out = [0u64; 4];
    for (o, p) in out.iter_mut().zip(&parts) {
        *o = p.parse().map_err(|e| format!("`{p}`: {e}"))?;
    }
    Ok(out)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(a) => commands::train(&a),
        Command::Extract(a) => commands::extract(&a),
        Command::Eval(a) => commands::eval(&a),
        Command::Synth(a) => commands::synth(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
