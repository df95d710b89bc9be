//! Command-line surface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(
    name = "chebcrit",
    version,
    about = "Polynomial approximation with every critical point inside the interval"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build one approximant and export it with sampled errors.
    Approximate(ApproximateArgs),
    /// Sup-error versus degree, with a log-log fit.
    Rate(RateArgs),
    /// Run the inequality checks.
    Verify(VerifyArgs),
    /// Pair degree-n approximants of a bounded function with test functions.
    Weakstar(WeakstarArgs),
    /// Level-set measures and sign densities of the perturbed derivative.
    Divergence(DivergenceArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct FunctionArgs {
    /// Builtin target: abs, sign, relu, sin:K, poly:c0,c1,...
    #[arg(long = "fn", value_name = "SPEC")]
    pub function: Option<String>,
    /// CSV file of `x,value` rows defining a piecewise-linear target.
    #[arg(long, value_name = "FILE", conflicts_with = "function")]
    pub knots: Option<PathBuf>,
    /// Interval `alpha,beta` the target lives on; reduced affinely to [-1, 1].
    #[arg(long, value_name = "ALPHA,BETA", allow_hyphen_values = true)]
    pub interval: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Output directory; tables go to stdout when absent.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Cap on every perturbation factor.
    #[arg(long = "t-cap", default_value_t = 0.1)]
    pub t_cap: f64,
    /// Derivative scale is Lipschitz / level.
    #[arg(long, default_value_t = 0.25)]
    pub level: f64,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, default_value_t = 0.7)]
    pub damping: f64,
    #[arg(long = "max-iter", default_value_t = 200)]
    pub max_iter: usize,
    /// Leave this many groups at each end unperturbed.
    #[arg(long = "edge-groups", default_value_t = 0)]
    pub edge_groups: usize,
    /// Retry once with halved damping after a failed solve.
    #[arg(long)]
    pub restart: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ApproximateArgs {
    #[command(flatten)]
    pub function: FunctionArgs,
    #[arg(long)]
    pub degree: usize,
    /// Number of uniformly spaced rows in the sample table.
    #[arg(long, default_value_t = 1001)]
    pub samples: usize,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Args)]
pub struct RateArgs {
    #[command(flatten)]
    pub function: FunctionArgs,
    #[arg(long, value_name = "N,N,...", default_value = "105,201,401,801")]
    pub degrees: String,
    /// Also emit a gnuplot script for the log-log plot.
    #[arg(long)]
    pub gnuplot: bool,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// Degrees for the grid and group checks.
    #[arg(long = "n", value_name = "N,N,...", default_value = "9,33,105,1001")]
    pub degrees: String,
    /// Run a single check.
    #[arg(long, value_name = "ID")]
    pub only: Option<String>,
    /// Print the check ids with the inequality each tests, then exit.
    #[arg(long)]
    pub list: bool,
    /// Spacing of the four-point configuration.
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long = "t-cap", default_value_t = 0.1)]
    pub t_cap: f64,
}

#[derive(Debug, Clone, Args)]
pub struct WeakstarArgs {
    #[command(flatten)]
    pub function: FunctionArgs,
    #[arg(long, value_name = "N,N,...", default_value = "105,201,401")]
    pub degrees: String,
    /// Test functions: 1, x, xK or any builtin spec.
    #[arg(long = "test", value_name = "G,G,...", default_value = "1,x,x2")]
    pub tests: String,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Args)]
pub struct DivergenceArgs {
    #[command(flatten)]
    pub function: FunctionArgs,
    #[arg(long, value_name = "N,N,...", default_value = "401")]
    pub degrees: String,
    #[arg(long, value_name = "TAU,TAU,...", default_value = "0.05,0.1,0.5")]
    pub thresholds: String,
    #[command(flatten)]
    pub run: RunArgs,
}
