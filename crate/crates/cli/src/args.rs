use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub const OUT_DIR_ENV: &str = "SLOGISTIC_OUT_DIR";

/// Experiments on the stochastic logistic map x' = λx(1-x), λ ~ U[λ̄-Δλ, λ̄+Δλ].
///
/// Every subcommand prints a JSON report on stdout and writes the requested
/// artifacts as `<subcommand>-<lambda_bar>-<delta>-<seed>.<ext>` into the
/// output directory. Exit status is 0 on success, 2 when an argument or
/// config value violates a precondition (nothing is computed), 1 when a
/// computation fails.
#[derive(Debug, Parser)]
#[command(name = "slogistic", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Terminal states of 100 uniform starting points per parameter value.
    ///
    /// CSV columns: parameter,initial,state. SVG: scatter with vertical
    /// lines at the period-doubling values 3, 1+√6 and 3.8284.
    Bifurcation(BifurcationArgs),
    /// Histograms of an ensemble started uniform on [0, 1] at checkpoint
    /// generations.
    ///
    /// CSV columns: generation,bin_lo,bin_hi,count,density. SVG: step plot
    /// of the last checkpoint with the ensemble mean and the deterministic
    /// cycle mean marked.
    Evolve(EvolveArgs),
    /// Long-term stochastic mean against the mean of the attracting cycle.
    ///
    /// CSV: the final ensemble (index,x). SVG: its histogram with both means
    /// marked.
    Compare(CompareArgs),
    /// Period-2 checks: support containment and ordering, right-peak
    /// identity, left-peak shift, variance decay, H-root ordering, convexity.
    ///
    /// CSV columns: check,passed.
    Verify(VerifyArgs),
    /// Sign of (stochastic mean - cycle mean) in successive period-2^ρ
    /// regimes, at every requested half-width.
    ///
    /// CSV: one row per (Δλ, ρ).
    Flipflop(FlipflopArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl Format {
    pub fn ext(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Svg => "svg",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Deterministic,
    Stochastic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScaleArg {
    Desk,
    Paper,
}

/// Options shared by every subcommand. Each long flag can also be given as
/// `key = value` in the file passed to `--config` (dashes become
/// underscores); flags win over the file.
#[derive(Debug, Args)]
pub struct Common {
    /// Flat `key = value` file; `#` starts a comment.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Random seed [default: 20200817].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory [default: $SLOGISTIC_OUT_DIR, else the current directory].
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    /// Artifacts to write, comma separated.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub format: Option<Vec<Format>>,
}

#[derive(Debug, Args)]
pub struct BifurcationArgs {
    /// [default: deterministic]
    #[arg(long, value_enum)]
    pub kind: Option<Kind>,
    /// First parameter value [default: 0].
    #[arg(long, allow_negative_numbers = true)]
    pub from: Option<f64>,
    /// Last parameter value [default: 4].
    #[arg(long, allow_negative_numbers = true)]
    pub to: Option<f64>,
    /// Grid spacing [default: 0.001].
    #[arg(long)]
    pub step: Option<f64>,
    /// Noise half-width, stochastic kind only [default: 0.1].
    #[arg(long, allow_negative_numbers = true)]
    pub delta: Option<f64>,
    /// Starting points per parameter value [default: 100].
    #[arg(long)]
    pub initials: Option<usize>,
    /// Iterations before the state is recorded [default: 1000].
    #[arg(long)]
    pub iterations: Option<usize>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct EvolveArgs {
    /// Mean of the parameter law [default: 1.508].
    #[arg(long, allow_negative_numbers = true)]
    pub lambda_bar: Option<f64>,
    /// Noise half-width [default: 0.024].
    #[arg(long, allow_negative_numbers = true)]
    pub delta: Option<f64>,
    /// [default: 1000]
    #[arg(long)]
    pub particles: Option<usize>,
    /// Ascending generations to snapshot [default: 0,1,10,50,100,10000].
    #[arg(long, value_delimiter = ',')]
    pub checkpoints: Option<Vec<u64>>,
    /// Histogram bins on [0, 1] [default: 200].
    #[arg(long)]
    pub bins: Option<usize>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Mean of the parameter law [default: 3.208].
    #[arg(long, allow_negative_numbers = true)]
    pub lambda_bar: Option<f64>,
    /// Noise half-width [default: 0.024].
    #[arg(long, allow_negative_numbers = true)]
    pub delta: Option<f64>,
    /// desk: 2000 particles × 2000 generations; paper: 20000 × 10000 [default: desk].
    #[arg(long, value_enum)]
    pub scale: Option<ScaleArg>,
    /// Overrides the scale.
    #[arg(long)]
    pub particles: Option<usize>,
    /// Overrides the scale.
    #[arg(long)]
    pub generations: Option<u64>,
    /// Trailing generations averaged per particle; a multiple of the cycle
    /// period [default: 1000].
    #[arg(long)]
    pub window: Option<u64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Mean of the parameter law, inside (3, 1+√6) [default: 3.208].
    #[arg(long, allow_negative_numbers = true)]
    pub lambda_bar: Option<f64>,
    /// Noise half-width [default: 0.024].
    #[arg(long, allow_negative_numbers = true)]
    pub delta: Option<f64>,
    /// [default: 100000]
    #[arg(long)]
    pub particles: Option<usize>,
    /// Minimum generations before the drift test [default: 2000].
    #[arg(long)]
    pub generations: Option<u64>,
    /// Half-widths of the variance profile [default: 0.05,0.025,0.0125,0.00625].
    #[arg(long, value_delimiter = ',')]
    pub h_values: Option<Vec<f64>>,
    /// Upward shift of h for the root check [default: 1e-6].
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct FlipflopArgs {
    /// Exponents ρ of the period 2^ρ, at most 6 [default: 1,2,3].
    #[arg(long, value_delimiter = ',')]
    pub rho: Option<Vec<u32>>,
    /// Noise half-widths to sweep [default: 0.024].
    #[arg(long, value_delimiter = ',')]
    pub delta: Option<Vec<f64>>,
    /// [default: desk]
    #[arg(long, value_enum)]
    pub scale: Option<ScaleArg>,
    #[arg(long)]
    pub particles: Option<usize>,
    #[arg(long)]
    pub generations: Option<u64>,
    /// Rounded down to a multiple of each period [default: 1000].
    #[arg(long)]
    pub window: Option<u64>,
    #[command(flatten)]
    pub common: Common,
}
