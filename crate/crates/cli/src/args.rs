use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qmix_core::{GraphConfig, InitState, TsneInit};

/// Environment variable holding the default output directory.
pub const OUT_DIR_ENV: &str = "QMIX_OUT_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "qmix",
    version,
    about = "QAOA max-cut parameter datasets and their PCA / t-SNE analysis"
)]
pub struct Cli {
    /// Output directory shared by all subcommands.
    #[arg(long, global = true, env = OUT_DIR_ENV, default_value = "qmix-out")]
    pub out: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimise QAOA parameters for every requested cell and save the datasets.
    Generate(GenerateArgs),
    /// Explained-variance tables and principal-component scatters.
    Pca(PcaArgs),
    /// KL-divergence tables and t-SNE embedding scatters.
    Tsne(TsneArgs),
    /// Collate every table under the output directory into report.md.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConfigArg {
    Cyclic,
    Complete,
}

impl From<ConfigArg> for GraphConfig {
    fn from(c: ConfigArg) -> Self {
        match c {
            ConfigArg::Cyclic => GraphConfig::Cyclic,
            ConfigArg::Complete => GraphConfig::Complete,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitArg {
    Plus,
    Zero,
}

impl From<InitArg> for InitState {
    fn from(i: InitArg) -> Self {
        match i {
            InitArg::Plus => InitState::Plus,
            InitArg::Zero => InitState::Zero,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TsneInitArg {
    Pca,
    Random,
}

impl From<TsneInitArg> for TsneInit {
    fn from(i: TsneInitArg) -> Self {
        match i {
            TsneInitArg::Pca => TsneInit::Pca,
            TsneInitArg::Random => TsneInit::Random,
        }
    }
}

fn parse_nodes(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(n @ (4 | 10 | 15)) => Ok(n),
        _ => Err(format!("node count must be one of 4, 10, 15 (got {s})")),
    }
}

fn parse_depth(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(d @ 1..=3) => Ok(d),
        _ => Err(format!("depth must be 1, 2 or 3 (got {s})")),
    }
}

fn parse_perplexity(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(p) if p > 0.0 && p.is_finite() => Ok(p),
        _ => Err(format!("perplexity must be a positive number (got {s})")),
    }
}

/// Every list flag takes comma-separated values; the cartesian product forms
/// the grid of generated cells.
#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_delimiter = ',', default_value = "4", value_parser = parse_nodes)]
    pub nodes: Vec<usize>,

    #[arg(long, value_delimiter = ',', default_value = "cyclic")]
    pub config: Vec<ConfigArg>,

    #[arg(long, value_delimiter = ',', default_value = "1", value_parser = parse_depth)]
    pub depth: Vec<usize>,

    /// `true`, `false` or `false,true`.
    #[arg(long, value_delimiter = ',', default_value = "false", action = clap::ArgAction::Set, num_args = 1..)]
    pub entangled: Vec<bool>,

    #[arg(long, default_value_t = 100)]
    pub runs: usize,

    /// Master seed; run `r` uses `seed + r`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, default_value_t = 10)]
    pub restarts: usize,

    /// Hill-climbing iterations per restart.
    #[arg(long, default_value_t = 2000)]
    pub iters: usize,

    /// Standard deviation of the Gaussian step.
    #[arg(long, default_value_t = 0.1)]
    pub sigma: f64,

    #[arg(long, value_enum, default_value = "plus")]
    pub init: InitArg,

    /// Allow depth 3 on 4-node problems.
    #[arg(long)]
    pub force: bool,

    /// Also write the final statevector of run 0 as `<stem>.amplitudes.csv`.
    #[arg(long)]
    pub dump_amplitudes: bool,
}

#[derive(Debug, Args)]
pub struct PcaArgs {
    /// Dataset CSV for an individual fit; repeatable.
    #[arg(long = "input", value_name = "CSV")]
    pub inputs: Vec<PathBuf>,

    /// Two datasets differing only in the entanglement flag; repeatable.
    #[arg(long = "pair", num_args = 2, value_names = ["CSV_A", "CSV_B"], action = clap::ArgAction::Append)]
    pub pairs: Vec<PathBuf>,

    /// Number of principal components.
    #[arg(short, long, default_value_t = 3)]
    pub k: usize,

    /// Standardise columns before the fit.
    #[arg(long)]
    pub zscore: bool,
}

#[derive(Debug, Args)]
pub struct TsneArgs {
    #[arg(long = "input", value_name = "CSV")]
    pub inputs: Vec<PathBuf>,

    #[arg(long = "pair", num_args = 2, value_names = ["CSV_A", "CSV_B"], action = clap::ArgAction::Append)]
    pub pairs: Vec<PathBuf>,

    /// Perplexities for individual fits.
    #[arg(long, value_delimiter = ',', default_value = "3,30,99", value_parser = parse_perplexity)]
    pub perplexities: Vec<f64>,

    /// Perplexities for pair fits.
    #[arg(long, value_delimiter = ',', default_value = "3,30,99,199", value_parser = parse_perplexity)]
    pub pair_perplexities: Vec<f64>,

    #[arg(long, default_value_t = 1000)]
    pub iterations: usize,

    #[arg(long, default_value_t = 200.0)]
    pub learning_rate: f64,

    #[arg(long, value_enum, default_value = "pca")]
    pub init: TsneInitArg,

    /// Seed for random initialisation.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Report file; defaults to `<out>/report.md`.
    #[arg(long)]
    pub output: Option<PathBuf>,
}
