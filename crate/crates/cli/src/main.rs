//! `tadkit` command-line front end.
//!
//! Exit status: 0 on success, 1 on bad input or usage, 2 when an internal
//! invariant is violated (including panics).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::Internal;

#[derive(Debug, Parser)]
#[command(name = "tadkit", version, about = "Temporal action detection toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Score predictions against ground truth (mAP over a tIoU sweep).
    Evaluate(EvaluateArgs),
    /// Per-category soft-NMS over a prediction file.
    Nms(NmsArgs),
    /// Weighted fusion of confidence maps for one video.
    FuseMaps(FuseMapsArgs),
    /// Merge several models' predictions, then soft-NMS and top-M.
    Ensemble(EnsembleArgs),
    /// Perturbed training proposals with regression targets.
    FakeProposals(FakeProposalsArgs),
    /// Loss value, gradients and a finite-difference gradient check.
    LossCheck(LossCheckArgs),
    /// Fold expanded class scores onto foreground classes, or expand a label space.
    FoldLabels(FoldLabelsArgs),
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    /// `start:step:stop` or a comma-separated list.
    #[arg(long, default_value = "0.5:0.05:0.95")]
    pub thresholds: String,
    #[arg(long, default_value_t = tadkit::evaluation::DEFAULT_TOP_M)]
    pub top_m: usize,
    /// Also write the report JSON here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct NmsArgs {
    #[arg(long)]
    pub pred: PathBuf,
    /// Defaults to the sorted labels found in the predictions.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// JSON with `sigma`, `score_floor`, `decay` and `per_category` overrides.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub score_floor: Option<f64>,
    /// Keep only the best M detections per video after suppression.
    #[arg(long)]
    pub top_m: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FuseMapsArgs {
    /// Input maps, all for the same video.
    #[arg(required = true)]
    pub maps: Vec<PathBuf>,
    /// One weight per map; uniform when omitted.
    #[arg(long, allow_hyphen_values = true)]
    pub weights: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the top-K proposals of the fused map as JSON.
    #[arg(long, requires = "duration")]
    pub proposals: Option<PathBuf>,
    /// Video duration in seconds, used to clip proposals.
    #[arg(long)]
    pub duration: Option<f64>,
    #[arg(long, default_value_t = tadkit::confidence_map::DEFAULT_TOP_K)]
    pub top_k: usize,
}

#[derive(Debug, Args)]
pub struct EnsembleArgs {
    /// Ensemble file: models with weights plus optional NMS settings.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Replaces the weights given in the ensemble file.
    #[arg(long, allow_hyphen_values = true)]
    pub weights: Option<String>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub score_floor: Option<f64>,
    #[arg(long, default_value_t = tadkit::evaluation::DEFAULT_TOP_M)]
    pub top_m: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["segment", "gt"]))]
pub struct FakeProposalsArgs {
    /// A single ground truth as `start,end`.
    #[arg(long)]
    pub segment: Option<String>,
    /// Generate for every instance of a ground-truth file.
    #[arg(long, requires = "labels")]
    pub gt: Option<PathBuf>,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Comma-separated boundary offsets as fractions of the segment length.
    #[arg(long, allow_hyphen_values = true)]
    pub offsets: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LossCheckArgs {
    /// `{"s_p": [...], "s_n": [...], "params": {...}}`. A random batch is drawn when omitted.
    #[arg(long)]
    pub batch: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("input").required(true).args(["scores", "expand"]))]
pub struct FoldLabelsArgs {
    /// `{"<video>": [p_0, ..., p_2N-1]}` over an expanded label space.
    #[arg(long)]
    pub scores: Option<PathBuf>,
    /// Instead write the expanded form of `--labels`.
    #[arg(long, requires = "labels")]
    pub expand: bool,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Nms(a) => commands::nms(a),
        Command::FuseMaps(a) => commands::fuse_maps(a),
        Command::Ensemble(a) => commands::ensemble(a),
        Command::FakeProposals(a) => commands::fake_proposals(a),
        Command::LossCheck(a) => commands::loss_check(a),
        Command::FoldLabels(a) => commands::fold_labels(a),
    }
}

/// Joins the error chain, skipping causes already quoted by their parent.
fn describe(e: &anyhow::Error) -> String {
    let mut msg = e.to_string();
    for cause in e.chain().skip(1) {
        let text = cause.to_string();
        if !msg.contains(&text) {
            msg.push_str(": ");
            msg.push_str(&text);
        }
    }
    msg
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {}", describe(&e));
            if e.downcast_ref::<Internal>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
        Err(_) => ExitCode::from(2),
    }
}
