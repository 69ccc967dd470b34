use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "levelset", version, about = "Plug-in density level sets: estimates, limiting variances, simulations and tests")]
pub struct Cli {
    /// Worker threads (results do not depend on it).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Symmetric-difference functional of one estimate against the model.
    Estimate(EstimateArgs),
    /// Limiting variance, norming rate and mean constant.
    Sigma(SigmaArgs),
    /// Monte Carlo replications of the functional.
    Sim(SimArgs),
    /// Subsampling estimate of the limiting variance.
    Variance(VarianceArgs),
    /// Online test of a batch against a reference.
    Test(TestArgs),
    /// Assumption checks for a configuration.
    Check(CheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelArg {
    Box,
    Radpoly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntegratorArg {
    Radial,
    Scan,
    Line,
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    Fixed,
    Poisson,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CalibrationArg {
    Simulated,
    Closed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CenteringArg {
    Reference,
    Estimate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormatArg {
    Csv,
    Json,
}

/// Model, kernel and level shared by most subcommands.
#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    /// Built-in model: gauss2d or gauss1d.
    #[arg(long, default_value = "gauss2d")]
    pub model: String,
    #[arg(long, value_enum, default_value = "box")]
    pub kernel: KernelArg,
    /// Coverage probability α of the level set (default 0.95).
    #[arg(long, conflicts_with = "c")]
    pub alpha: Option<f64>,
    /// Level c.
    #[arg(long)]
    pub c: Option<f64>,
}

/// Bandwidth given as a volume bandwidth or a per-axis scale; the default
/// is h = 1/√(n ln n).
#[derive(Debug, Clone, Args, Serialize)]
pub struct BandwidthArgs {
    #[arg(long, conflicts_with = "h_axis")]
    pub h_volume: Option<f64>,
    #[arg(long)]
    pub h_axis: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub bandwidth: BandwidthArgs,
    /// CSV of sample points; otherwise `--n` points are simulated.
    #[arg(long, required_unless_present = "n")]
    pub data: Option<PathBuf>,
    #[arg(long, conflicts_with = "data", requires = "seed")]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Weight: lebesgue, density, excess or excess:<p>.
    #[arg(long, default_value = "lebesgue")]
    pub weight: String,
    #[arg(long, value_enum)]
    pub integrator: Option<IntegratorArg>,
    /// Rays of the radial integrator.
    #[arg(long)]
    pub angles: Option<usize>,
    /// Cell side of the grid integrator.
    #[arg(long)]
    pub cell: Option<f64>,
    /// Line spacing of the scan integrator.
    #[arg(long)]
    pub spacing: Option<f64>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FormatArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SigmaArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value = "lebesgue")]
    pub weight: String,
    /// Limit γ; defaults to the proxy √(n h^(1+2/d)) when `--n` is given,
    /// otherwise 0.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Sample size for the norming rate.
    #[arg(long)]
    pub n: Option<usize>,
    #[command(flatten)]
    pub bandwidth: BandwidthArgs,
    /// Gauss–Legendre nodes per axis.
    #[arg(long, default_value_t = 64)]
    pub nodes: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub bandwidth: BandwidthArgs,
    /// Sample sizes, ascending.
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 500)]
    pub reps: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value = "lebesgue")]
    pub weight: String,
    #[arg(long, value_enum, default_value = "fixed")]
    pub mode: ModeArg,
    #[arg(long, value_enum)]
    pub integrator: Option<IntegratorArg>,
    /// Extra coverage levels for the cross-level correlation table.
    #[arg(long, value_delimiter = ',')]
    pub alphas: Vec<f64>,
    /// Record per-replication wall-clock times.
    #[arg(long)]
    pub timings: bool,
    /// Directory for records CSV and summary JSON.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VarianceArgs {
    #[command(flatten)]
    pub common: Common,
    /// CSV of sample points; otherwise `--n` points are simulated.
    #[arg(long, required_unless_present = "n")]
    pub data: Option<PathBuf>,
    #[arg(long, conflicts_with = "data")]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value = "lebesgue")]
    pub weight: String,
    /// Subsample size; default ⌈n^exponent⌉.
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long, default_value_t = 0.7)]
    pub m_exponent: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TestArgs {
    /// `model:<name>` or `csv:<path>`.
    #[arg(long)]
    pub reference: String,
    /// `csv:<path>`.
    #[arg(long)]
    pub batch: String,
    #[arg(long, default_value_t = 0.95)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value = "box")]
    pub kernel: KernelArg,
    #[arg(long, value_enum, default_value = "simulated")]
    pub calibration: CalibrationArg,
    /// Null replications of the simulated calibration.
    #[arg(long, default_value_t = 500)]
    pub reps: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 1.96)]
    pub threshold: f64,
    #[arg(long, value_enum, default_value = "reference")]
    pub centering: CenteringArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CheckArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub bandwidth: BandwidthArgs,
    #[arg(long, default_value_t = 1_000_000)]
    pub n: usize,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FormatArg,
}
