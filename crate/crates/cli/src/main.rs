use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod dataset;

#[derive(Parser, Debug)]
#[command(
    name = "panoptic-eval",
    version,
    about = "Panoptic mask synthesis and evaluation"
)]
struct Cli {
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    jobs: Option<u16>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Turn box annotations into panoptic ground truth.
    Synthesize(SynthesizeArgs),
    /// Score predictions against ground truth at one IoU threshold.
    Evaluate(EvaluateArgs),
    /// Score predictions over a grid of IoU thresholds.
    Sweep(SweepArgs),
    /// Assign cross-validation folds in a dataset manifest.
    Split(SplitArgs),
    /// Mean and standard deviation over per-fold metric files.
    Aggregate(AggregateArgs),
}

#[derive(Args, Debug)]
struct SynthesizeArgs {
    /// Directory of grayscale PNGs named `<image_id>.png`.
    #[arg(long)]
    images: PathBuf,
    /// Box annotation CSV.
    #[arg(long)]
    annotations: PathBuf,
    /// Category table (JSON list of `{id, name}`).
    #[arg(long)]
    categories: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Gaussian blur sigma in pixels.
    #[arg(long, default_value_t = 7.0, value_parser = positive_f64)]
    sigma: f64,
    /// Starting neighbour count of the concave hull.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(3..))]
    hull_k: u32,
    #[arg(long, default_value = "image_id")]
    image_id_col: String,
    #[arg(long, default_value = "xmin")]
    xmin_col: String,
    #[arg(long, default_value = "ymin")]
    ymin_col: String,
    #[arg(long, default_value = "xmax")]
    xmax_col: String,
    #[arg(long, default_value = "ymax")]
    ymax_col: String,
    #[arg(long, default_value = "category")]
    category_col: String,
}

#[derive(Args, Debug, Clone)]
struct MatchFlags {
    /// Let segments of different categories match.
    #[arg(long)]
    no_class_aware: bool,
    /// Ignore unmatched predictions lying mostly over ground-truth void.
    #[arg(long)]
    void_forgiveness: bool,
    /// Pool counts over classes instead of averaging per class.
    #[arg(long)]
    micro: bool,
    /// Average Dice per image instead of pooling pixels.
    #[arg(long)]
    per_image_dice: bool,
    /// Exact area under the precision envelope instead of 101 recall points.
    #[arg(long)]
    all_points_ap: bool,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[arg(long)]
    gt: PathBuf,
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// IoU threshold for a match.
    #[arg(long, default_value_t = 0.5, value_parser = unit_interval)]
    tau: f64,
    #[command(flatten)]
    flags: MatchFlags,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long)]
    gt: PathBuf,
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated thresholds; defaults to 0.05..0.90 in steps of 0.05.
    #[arg(long, value_delimiter = ',', value_parser = unit_interval)]
    taus: Option<Vec<f64>>,
    #[command(flatten)]
    flags: MatchFlags,
}

#[derive(Args, Debug)]
struct SplitArgs {
    /// Manifest CSV (image_id, image_path, gt_path, pred_path, group, fold).
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u32).range(2..))]
    k: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Where to write the updated manifest; defaults to overwriting the input.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AggregateArgs {
    /// Per-fold `metrics.json` files.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Row label in the summary tables.
    #[arg(long, default_value = "model")]
    name: String,
}

fn positive_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(format!("must be a positive number, got {s}"))
    }
}

fn unit_interval(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(format!("must lie in (0, 1], got {s}"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs as usize)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    let result = match cli.command {
        Command::Synthesize(a) => commands::synthesize(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Split(a) => commands::split(a),
        Command::Aggregate(a) => commands::aggregate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
