use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use orthant::kernels::KernelFamily;

#[derive(Debug, Parser)]
#[command(
    name = "orthant",
    version,
    about = "Variability indexes, associated-kernel smoothing and semiparametric diagnostics for nonnegative data",
    max_term_width = 100
)]
pub struct Cli {
    /// Directory receiving the output files
    #[arg(long, global = true, env = "ORTHANT_OUT", default_value = ".")]
    pub out: PathBuf,

    /// Maximum number of worker threads (results do not depend on it)
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Output files to write
    #[arg(long, global = true, value_enum, value_delimiter = ',', default_value = "json,csv")]
    pub format: Vec<Format>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Dispersion and variation indexes of every margin, pair and the full vector
    Indexes(IndexesArgs),
    /// Fit exponential and gamma start models and report correlations
    Fit(FitArgs),
    /// Kernel density estimate at the data points or on a grid
    Smooth(SmoothArgs),
    /// Semiparametric diagnostic; the exit status encodes the decision
    /// (0 parametric, 1 semiparametric, 2 nonparametric)
    Diagnose(DiagnoseArgs),
    /// Simulate a Marshall-Olkin exponential sample
    MoSim(MoSimArgs),
    /// Closed-form and numeric moments of one associated kernel
    KernelsProbe(ProbeArgs),
    /// Write a built-in dataset as CSV
    Fixture(FixtureArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FixtureName {
    Waterpumps,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Built-in dataset
    #[arg(long, value_enum, conflicts_with = "data", required_unless_present = "data")]
    pub fixture: Option<FixtureName>,

    /// CSV file with one observation per row
    #[arg(long, value_name = "FILE")]
    pub data: Option<PathBuf>,

    /// The CSV file has no header row
    #[arg(long, requires = "data")]
    pub no_header: bool,

    /// Treat the data as counts
    #[arg(long)]
    pub counts: bool,

    /// Columns to keep, by label
    #[arg(long, value_delimiter = ',', value_name = "LABELS")]
    pub columns: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DivisorArg {
    #[value(name = "n-1")]
    NMinus1,
    N,
}

#[derive(Debug, Args)]
pub struct IndexesArgs {
    #[command(flatten)]
    pub input: InputArgs,

    /// Covariance divisor
    #[arg(long, value_enum, default_value = "n-1")]
    pub divisor: DivisorArg,

    /// Tolerance for the equi/over/under classification
    #[arg(long, default_value_t = 0.05)]
    pub eps: f64,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputArgs,

    /// Covariance divisor
    #[arg(long, value_enum, default_value = "n-1")]
    pub divisor: DivisorArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StartArg {
    Exp,
    Gamma,
    Mo,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SelectorArg {
    AdaptiveBayes,
    LocalBayes,
    GlobalBayes,
    Cv,
    Fixed,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Kernel family, one for all columns or one per column
    /// (gamma, lognormal2, weibull, bs, inverse-gamma, rig, inverse-gaussian,
    /// lognormal1, binomial, poisson, dirdu:C, triangular:M)
    #[arg(long, value_delimiter = ',', default_value = "gamma", value_parser = parse_kernel)]
    pub kernel: Vec<KernelFamily>,

    /// Bandwidth selector
    #[arg(long, value_enum, default_value = "adaptive-bayes")]
    pub selector: SelectorArg,

    /// Bandwidths for the fixed selector, one for all columns or one per column
    #[arg(long, value_delimiter = ',')]
    pub h: Vec<f64>,

    /// Shape of the inverse-gamma bandwidth prior [default: n^(2/5)]
    #[arg(long)]
    pub alpha: Option<f64>,

    /// Scale of the inverse-gamma bandwidth prior, one for all columns or one per column [default: 1]
    #[arg(long, value_delimiter = ',')]
    pub beta: Vec<f64>,

    /// Marshall-Olkin rates for the mo start
    #[arg(long, value_delimiter = ',')]
    pub mu: Vec<f64>,

    /// Marshall-Olkin common-shock rate for the mo start
    #[arg(long)]
    pub mu0: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SmoothArgs {
    #[command(flatten)]
    pub input: InputArgs,

    #[command(flatten)]
    pub model: ModelArgs,

    /// Parametric start model
    #[arg(long, value_enum, default_value = "none")]
    pub start: StartArg,

    /// Evaluate on this many equally spaced points instead of the data (univariate only)
    #[arg(long)]
    pub grid: Option<usize>,

    /// Divide the estimate by its total mass
    #[arg(long)]
    pub renormalize: bool,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    #[command(flatten)]
    pub input: InputArgs,

    #[command(flatten)]
    pub model: ModelArgs,

    /// Parametric start model
    #[arg(long, value_enum, default_value = "exp")]
    pub start: StartArg,

    /// Half-width of the acceptance band for the log-weights
    #[arg(long, default_value_t = 1.96)]
    pub band: f64,

    /// Divide the log-weights by their standard deviation before counting
    #[arg(long)]
    pub standardize: bool,

    /// Bands for the sensitivity table
    #[arg(long, value_delimiter = ',', default_value = "1.0,1.64,1.96,2.58")]
    pub sensitivity: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct MoSimArgs {
    /// Rates of the individual shocks
    #[arg(long, value_delimiter = ',', required = true)]
    pub mu: Vec<f64>,

    /// Rate of the common shock
    #[arg(long)]
    pub mu0: f64,

    /// Sample size
    #[arg(long)]
    pub n: usize,

    /// Random seed
    #[arg(long)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ProbeArgs {
    /// Kernel family
    #[arg(long, value_parser = parse_kernel)]
    pub kernel: KernelFamily,

    /// Target point
    #[arg(long)]
    pub x: f64,

    /// Bandwidth
    #[arg(long)]
    pub h: f64,
}

#[derive(Debug, Args)]
pub struct FixtureArgs {
    /// Dataset to export
    #[arg(value_enum)]
    pub name: FixtureName,
}

fn parse_kernel(s: &str) -> Result<KernelFamily, String> {
    s.parse().map_err(|e: orthant::Error| e.to_string())
}
