use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use ddorder_core::{OrderingSpec, Problem, Sense};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "ddorder",
    version,
    about = "Decision-diagram bounds with learned variable orderings"
)]
pub struct Cli {
    /// Key-value file (`key = value` per line) supplying defaults for any
    /// long option; options given on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

// parsed once per process, so the size spread between variants is irrelevant
#[allow(clippy::large_enum_variant)]
#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate random Barabási–Albert instances.
    Generate(GenerateArgs),
    /// Train an ordering policy.
    Train(TrainArgs),
    /// Compile one instance and print its bound.
    Bound(BoundArgs),
    /// Compare ordering methods on a set of instances.
    Evaluate(EvaluateArgs),
    /// Performance profiles from an evaluation report.
    Profile(ProfileArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct GenerateArgs {
    #[arg(long)]
    pub problem: Problem,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub nu: usize,
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    /// Defaults to 1 for misp and 1 for mcp.
    #[arg(long)]
    pub weight_low: Option<i64>,
    /// Defaults to 1 for misp and 10 for mcp.
    #[arg(long)]
    pub weight_high: Option<i64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "instances")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct TrainArgs {
    #[arg(long)]
    pub problem: Problem,
    #[arg(long)]
    pub sense: Sense,
    #[arg(long, default_value_t = 2)]
    pub width: usize,
    #[arg(long)]
    pub episodes: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub eps_start: Option<f64>,
    #[arg(long)]
    pub eps_end: Option<f64>,
    /// Fraction of the episodes over which exploration decays.
    #[arg(long)]
    pub eps_decay: Option<f64>,
    #[arg(long)]
    pub reward_scale: Option<f64>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub replay_capacity: Option<usize>,
    #[arg(long)]
    pub train_set: Option<usize>,
    #[arg(long)]
    pub refresh_every: Option<usize>,
    #[arg(long)]
    pub validation_set: Option<usize>,
    #[arg(long)]
    pub validation_every: Option<usize>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long)]
    pub weight_scale: Option<f64>,
    #[arg(long)]
    pub n_min: Option<usize>,
    #[arg(long)]
    pub n_max: Option<usize>,
    #[arg(long)]
    pub nu: Option<usize>,
    #[arg(long)]
    pub weight_low: Option<i64>,
    #[arg(long)]
    pub weight_high: Option<i64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Continue from this model instead of a fresh initialization.
    #[arg(long)]
    pub init: Option<PathBuf>,
    /// Allow continuing a model trained for the other bound direction.
    #[arg(long)]
    pub allow_sense_switch: bool,
    #[arg(long, default_value = "run")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct BoundArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long)]
    pub problem: Problem,
    #[arg(long)]
    pub method: OrderingSpec,
    #[arg(long)]
    pub sense: Sense,
    #[arg(long)]
    pub width: usize,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the compiled diagram in Graphviz format.
    #[arg(long)]
    pub dot: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct EvaluateArgs {
    /// Instance files or directories of `.gr` files.
    #[arg(long, num_args = 1.., value_delimiter = ',', required = true)]
    pub instances: Vec<PathBuf>,
    #[arg(long)]
    pub problem: Problem,
    #[arg(long)]
    pub sense: Sense,
    #[arg(long)]
    pub width: usize,
    #[arg(long, value_delimiter = ',', required = true)]
    pub methods: Vec<OrderingSpec>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    pub rand_trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Write 0 in the timing column so reports are reproducible.
    #[arg(long)]
    pub no_timing: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct ProfileArgs {
    /// Evaluation report CSV.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}
