//! `capspace`: the trade-to-capabilities pipeline as a set of subcommands
//! sharing one output directory.

mod commands;
mod error;
mod plot;
mod workspace;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "capspace", version, about = "Economic complexity and capability-space pipeline")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse bilateral trade, compute RCA and the specialization matrix.
    Ingest(IngestArgs),
    /// ECI and PCI from the specialization matrix.
    Complexity(ComplexityArgs),
    /// Proximity network and its topology report.
    ProductSpace(SeededArgs),
    /// Gaussian mixture over PCI with AIC selection.
    Gmm(GmmArgs),
    /// Fit the six block proximities to the empirical network.
    Calibrate(CalibrateArgs),
    /// Generate a capability space, a product catalog and its network.
    Simulate(SimulateArgs),
    /// Infer country capability sets and production parameters.
    Infer(InferArgs),
    /// Growth regressions and ordinal models of the fitted parameters.
    Regress(RegressArgs),
    /// Render SVG figures from earlier stage outputs.
    Report(OutArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutArgs {
    /// Output directory shared by all stages.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct IngestArgs {
    /// Long-format trade CSV (year, exporter, importer, product, value).
    #[arg(long = "in", alias = "trade")]
    pub input: PathBuf,
    #[arg(long)]
    pub year: i32,
    /// Indicator CSV to check against the exporters.
    #[arg(long)]
    pub indicators: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    pub rca_threshold: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ComplexityArgs {
    /// Trade CSV; ingests first when given, otherwise reuses the ingest outputs.
    #[arg(long = "in", alias = "trade", requires = "year")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub year: Option<i32>,
    #[arg(long, default_value_t = 1.0)]
    pub rca_threshold: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SeededArgs {
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GmmArgs {
    /// Largest component count tried.
    #[arg(long, default_value_t = 8)]
    pub max_components: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub seeded: SeededArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Constant,
    Beta,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ModelArgs {
    #[arg(long, default_value_t = 1000)]
    pub n_products: usize,
    #[arg(long, default_value_t = 100)]
    pub cap_max: usize,
    #[arg(long, default_value_t = 25)]
    pub block_size: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::Constant)]
    pub mode: ModeArg,
    /// Beta concentration (beta mode only); defaults to the product count.
    #[arg(long)]
    pub kappa: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CalibrateArgs {
    #[arg(long, default_value_t = 20)]
    pub pop: usize,
    #[arg(long, default_value_t = 50)]
    pub gens: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub seeded: SeededArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    /// Six block proximities; defaults to calibration.json, then built-in values.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub params: Option<Vec<f64>>,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub seeded: SeededArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct InferArgs {
    /// Comma-separated ρ values; `-inf` is Leontief.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "1,0,-3,-9,-inf")]
    pub rho_grid: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "0.5,1,2,3,4")]
    pub nu_grid: Vec<f64>,
    #[arg(long, default_value_t = 5)]
    pub restarts: usize,
    #[arg(long, default_value_t = 100)]
    pub iters: usize,
    /// Accept only non-worsening moves.
    #[arg(long)]
    pub greedy: bool,
    /// Restrict to these country codes.
    #[arg(long, value_delimiter = ',')]
    pub countries: Option<Vec<String>>,
    #[command(flatten)]
    #[serde(flatten)]
    pub seeded: SeededArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RegressArgs {
    #[arg(long)]
    pub indicators: PathBuf,
    /// Base year; growth is averaged over the following `window` years.
    #[arg(long)]
    pub start_year: i32,
    #[arg(long)]
    pub window: i32,
    /// Any of 1, 2, 3, 4, logit-rho, logit-nu; all available when omitted.
    #[arg(long, value_delimiter = ',')]
    pub spec: Vec<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutArgs,
}

pub fn run<I: IntoIterator<Item = T>, T: Into<OsString> + Clone>(argv: I) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    if let Ok(v) = std::env::var("CAPSPACE_THREADS") {
        match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    log::warn!("could not size the worker pool: {e}");
                }
            }
            _ => {
                eprintln!("error: CAPSPACE_THREADS must be a positive integer, got {v:?}");
                return 1;
            }
        }
    }
    match commands::dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    std::process::exit(run(std::env::args_os()));
}
