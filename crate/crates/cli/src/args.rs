//! Command-line surface. Every subcommand's arguments double as its resolved
//! configuration, which is what manifests store and replay reads back.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use pathinf::infer::PairRule;
use pathinf::summarize::{Init, DEFAULT_CANDIDATE_CAP, DEFAULT_PRUNE_EPS};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "pathinf", version, about = "Pathway inference from incomplete binary observations")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CommonArgs {
    /// Master seed; every random stream is derived from it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (default: all cores). Outputs do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// `key = value` file whose entries override flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for output files (default: current directory).
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
}

fn parse_init(s: &str) -> Result<Init, String> {
    match s {
        "uniform" => Ok(Init::Uniform),
        "random" => Ok(Init::Random),
        other => Err(format!("unknown init {other:?}; expected uniform or random")),
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 10)]
    pub n_nodes: usize,
    #[arg(long, default_value_t = 15)]
    pub n_edges: usize,
    #[arg(long, default_value_t = 1000)]
    pub n_samples: usize,
    /// Mean of the Poisson step count per cascade.
    #[arg(long, alias = "lambda", default_value_t = 4.0)]
    pub poisson_lambda: f64,
    /// Probability that a positive entry is masked.
    #[arg(long, default_value_t = 0.1)]
    pub p_miss_pos: f64,
    /// Probability that a negative entry is masked.
    #[arg(long, default_value_t = 0.5)]
    pub p_miss_neg: f64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct PriorArgs {
    /// Assumed probability that a positive value is missing.
    #[arg(long, default_value_t = 0.1)]
    pub p_miss_pos: f64,
    /// Assumed probability that a negative value is missing.
    #[arg(long, default_value_t = 0.5)]
    pub p_miss_neg: f64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SolverArgs {
    /// Relative objective change that stops the solver.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, default_value_t = 20_000)]
    pub max_iters: usize,
    /// Starting point: uniform or random (Dirichlet draw from --seed).
    #[arg(long, value_parser = parse_init, default_value = "uniform")]
    pub init: Init,
    #[arg(long, default_value_t = DEFAULT_CANDIDATE_CAP)]
    pub candidate_cap: usize,
    /// States with probability at or below this are dropped.
    #[arg(long, default_value_t = DEFAULT_PRUNE_EPS)]
    pub eps_prune: f64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct RuleArgs {
    /// Pair eligibility: path (no path yet) or non-adjacent (no direct edge).
    #[arg(long, default_value = "path")]
    pub pair_rule: PairRule,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SummarizeArgs {
    /// Observations CSV.
    pub input: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub prior: PriorArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct InferArgs {
    /// State-matrix JSON.
    pub input: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub rule: RuleArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct PipelineArgs {
    /// Observations CSV.
    pub input: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub prior: PriorArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub rule: RuleArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct EvaluateArgs {
    /// Inferred graph JSON.
    pub graph: PathBuf,
    /// Ground-truth JSON.
    pub truth: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CrossvalArgs {
    /// Observations CSV.
    pub input: PathBuf,
    /// Share of rows kept in each subsample.
    #[arg(long, default_value_t = 0.85)]
    pub fraction: f64,
    #[arg(long, default_value_t = 100)]
    pub repeats: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub prior: PriorArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub rule: RuleArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SweepArgs {
    /// Edge counts (grid rows).
    #[arg(long, value_delimiter = ',', default_values_t = [10, 15, 20, 25])]
    pub edges: Vec<usize>,
    /// Positive-masking probabilities (grid columns); each is also the
    /// estimator's prior.
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.2, 0.3, 0.4])]
    pub p_values: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    pub repeats: usize,
    #[arg(long, default_value_t = 10)]
    pub n_nodes: usize,
    #[arg(long, default_value_t = 1000)]
    pub n_samples: usize,
    #[arg(long, alias = "lambda", default_value_t = 4.0)]
    pub poisson_lambda: f64,
    #[arg(long, default_value_t = 0.5)]
    pub p_miss_neg: f64,
    /// Prior used for cells with p = 0.
    #[arg(long, default_value_t = 0.1)]
    pub fallback_prior: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub rule: RuleArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    /// Manifest written by an earlier run.
    pub manifest: PathBuf,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(tag = "subcommand", content = "config", rename_all = "lowercase")]
pub enum Command {
    /// Simulate a ground-truth DAG and an observation matrix.
    Simulate(SimulateArgs),
    /// Fit the state distribution of an observations CSV.
    Summarize(SummarizeArgs),
    /// Infer the pathway graph from a state-matrix JSON.
    Infer(InferArgs),
    /// Summarize and infer in one run.
    Pipeline(PipelineArgs),
    /// Compare an inferred graph with a ground truth.
    Evaluate(EvaluateArgs),
    /// Edge stability over row subsamples.
    Crossval(CrossvalArgs),
    /// Simulation grid over edge counts and masking rates.
    Sweep(SweepArgs),
    /// Re-run the command recorded in a manifest and check its outputs.
    Replay(ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Summarize(_) => "summarize",
            Command::Infer(_) => "infer",
            Command::Pipeline(_) => "pipeline",
            Command::Evaluate(_) => "evaluate",
            Command::Crossval(_) => "crossval",
            Command::Sweep(_) => "sweep",
            Command::Replay(_) => "replay",
        }
    }
}
