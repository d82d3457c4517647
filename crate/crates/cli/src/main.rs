//! `scaling-laws`: count, fit, plan and synthesize scaling-law data.
//!
//! Exit codes: 0 success, 1 other failure, 2 usage, 3 parse, 4 under-determined fit.

mod commands;
mod error;
mod grid;

use clap::{Args, Parser, Subcommand, ValueEnum};
use scaling_laws::arch::Variant;
use scaling_laws::planner::{Resource, DEFAULT_HEADROOM, FIVE_PERCENT};
use scaling_laws::records::FitKind;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(name = "scaling-laws", version, about = "Scaling-law accounting, fitting and planning")]
struct Cli {
    /// Seed for fit starts and synthetic noise.
    #[arg(long, global = true, env = "SCALING_LAWS_SEED", default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parameter and multiplication counts of a context module.
    Count(CountArgs),
    /// Fit a law to converged runs or training curves and write a report.
    Fit(FitArgs),
    /// Answer a planning question from a fit report.
    Predict(PredictArgs),
    /// Extract the compute-efficient envelope of training curves and fit it.
    Frontier(FrontierArgs),
    /// Generate synthetic converged runs or training curves.
    #[command(subcommand)]
    Synth(SynthCommand),
    /// Emit plot-ready CSV of a fitted law over a log-spaced grid.
    Plot(PlotArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum VariantArg {
    Lstm,
    Transformer,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Lstm => Variant::Lstm,
            VariantArg::Transformer => Variant::Transformer,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SpaceArg {
    Raw,
    LogExcess,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ResourceArg {
    Data,
    Model,
    Compute,
}

impl From<ResourceArg> for Resource {
    fn from(r: ResourceArg) -> Self {
        match r {
            ResourceArg::Data => Resource::Data,
            ResourceArg::Model => Resource::Model,
            ResourceArg::Compute => Resource::Compute,
        }
    }
}

#[derive(Debug, Args)]
struct CountArgs {
    #[arg(long, value_enum)]
    variant: VariantArg,
    #[arg(long)]
    layers: u64,
    /// Layer width. Defaults to the variant's aspect ratio times `--layers`.
    #[arg(long, conflicts_with = "aspect_ratio")]
    units: Option<u64>,
    /// Units per layer used to derive the width.
    #[arg(long)]
    aspect_ratio: Option<u64>,
    /// Attention context in frames. Required for Transformers.
    #[arg(long)]
    n_ctx: Option<u64>,
    #[arg(long, default_value_t = scaling_laws::arch::DEFAULT_INPUT_DIM)]
    input_dim: u64,
    /// Report the LSTM layer total as printed in the original table.
    #[arg(long)]
    printed_total: bool,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct FitOptions {
    /// Number of optimizer starts.
    #[arg(long, default_value_t = 32)]
    starts: usize,
    /// Iteration budget per start.
    #[arg(long, default_value_t = 20_000)]
    max_iters: usize,
    /// Residual space. Frontier fits always use log-excess.
    #[arg(long, value_enum)]
    residual_space: Option<SpaceArg>,
}

#[derive(Debug, Args)]
struct FitArgs {
    /// One of ld, ln, kaplan, joint, frontier.
    kind: FitKind,
    /// Converged-run CSV, or curves CSV for `frontier`.
    #[arg(long, short)]
    input: PathBuf,
    /// Report path. Defaults to stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[command(flatten)]
    options: FitOptions,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("question").required(true).multiple(false))]
struct PredictArgs {
    #[arg(long)]
    report: PathBuf,
    /// Loss at a resource value (one-resource laws) or at `N D` (joint laws). Accepts `inf`.
    #[arg(long, group = "question", num_args = 1..=2, value_names = ["N", "D"], allow_negative_numbers = true)]
    loss_at: Option<Vec<f64>>,
    /// Hours of data a model with `N` parameters needs.
    #[arg(long, group = "question", value_name = "N")]
    min_data: Option<f64>,
    /// Ratio of the model term to the data term demanded by `--min-data`.
    #[arg(long, default_value_t = DEFAULT_HEADROOM, requires = "min_data")]
    headroom: f64,
    /// Which term of the joint law dominates at `N D`.
    #[arg(long, group = "question", num_args = 2, value_names = ["N", "D"])]
    bottleneck: Option<Vec<f64>>,
    /// Fractional drop of the reducible loss per doubling of compute.
    #[arg(long, group = "question")]
    double_compute: bool,
    /// Compute growth that halves the reducible loss.
    #[arg(long, group = "question")]
    halve_loss: bool,
    /// Growth of a resource that shrinks the reducible loss by `--reduction`.
    #[arg(long, group = "question", value_enum)]
    fold_increase: Option<ResourceArg>,
    #[arg(long, default_value_t = FIVE_PERCENT, requires = "fold_increase")]
    reduction: f64,
    /// Data growth per doubling of the model.
    #[arg(long, group = "question")]
    data_per_doubling: bool,
    /// Print only the JSON report.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct FrontierArgs {
    /// Curves CSV.
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Write the envelope as CSV instead of fitting it.
    #[arg(long)]
    envelope_only: bool,
    #[command(flatten)]
    options: FitOptions,
}

#[derive(Debug, Args)]
struct ModelFamily {
    #[arg(long, value_enum, default_value = "transformer")]
    variant: VariantArg,
    /// Layer counts, each scaled at the variant's aspect ratio.
    #[arg(long, value_delimiter = ',', default_values_t = scaling_laws::reference::LAYER_COUNTS)]
    layers: Vec<u64>,
    /// Attention context of Transformer models.
    #[arg(long, default_value_t = scaling_laws::synth::FAMILY_N_CTX)]
    n_ctx: u64,
}

#[derive(Debug, Subcommand)]
enum SynthCommand {
    /// Converged runs on a model-size by data-size grid.
    Grid {
        #[command(flatten)]
        family: ModelFamily,
        /// Training-set sizes in hours.
        #[arg(long, value_delimiter = ',', default_values_t = scaling_laws::synth::DEFAULT_DATA_HOURS)]
        hours: Vec<f64>,
        /// JSON law (a fit report or a law record). Defaults to the published converged-model law.
        #[arg(long)]
        law_file: Option<PathBuf>,
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Training curves of a model family under a joint law.
    Curves {
        #[command(flatten)]
        family: ModelFamily,
        #[arg(long, default_value_t = scaling_laws::synth::FAMILY_CHECKPOINTS)]
        checkpoints: usize,
        #[arg(long, default_value_t = scaling_laws::synth::FAMILY_FRAMES_PER_CHECKPOINT)]
        frames_per_checkpoint: u64,
        /// JSON joint law. Defaults to the frontier-family law.
        #[arg(long)]
        law_file: Option<PathBuf>,
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// One training curve lying exactly on a loss-versus-compute power law.
    ComputeCurve {
        #[arg(long, default_value_t = scaling_laws::reference::L_INF_COMPUTE)]
        l_inf: f64,
        /// Critical compute in operations.
        #[arg(long, default_value_t = 1e13)]
        critical: f64,
        #[arg(long)]
        alpha_c: f64,
        #[arg(long, value_enum, default_value = "lstm")]
        variant: VariantArg,
        #[arg(long, default_value_t = 2)]
        layers: u64,
        #[arg(long, default_value_t = scaling_laws::synth::FAMILY_N_CTX)]
        n_ctx: u64,
        #[arg(long, default_value_t = 200)]
        checkpoints: usize,
        #[arg(long, default_value_t = 36_000_000)]
        frames_per_checkpoint: u64,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct PlotArgs {
    #[arg(long)]
    report: PathBuf,
    /// Log-spaced grid `min:max:count` over the law's resource axis (hours for joint laws).
    #[arg(long)]
    grid: String,
    /// Model sizes for joint laws, as parameter counts.
    #[arg(long, value_delimiter = ',', conflicts_with = "layers")]
    sizes: Vec<f64>,
    /// Model sizes for joint laws, as layer counts of `--variant`.
    #[arg(long, value_delimiter = ',')]
    layers: Vec<u64>,
    #[arg(long, value_enum, default_value = "transformer")]
    variant: VariantArg,
    #[arg(long, default_value_t = scaling_laws::synth::FAMILY_N_CTX)]
    n_ctx: u64,
    /// Converged-run CSV whose points are appended with their predictions.
    #[arg(long)]
    observed: Option<PathBuf>,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
