//! `hsr`: command-line front end for simulation, equilibrium maps,
//! certification, control synthesis, recruitment sweeps and system
//! identification.

mod commands;
mod output;

use clap::{CommandFactory, Parser, Subcommand};
use hsr::HsrError;
use std::path::PathBuf;
use std::process::ExitCode;

pub const SCHEMA: &str = "hsr-report/v1";

#[derive(Parser, Debug)]
#[command(name = "hsr", version, about = "Hierarchical selective recruitment toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: Options,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Simulate a layer (--net) or a hierarchy (--hierarchy, optional --controls).
    Simulate,
    /// Equilibrium map of a layer (--net); evaluate it at --input if given.
    Equilibrium,
    /// Stability certificates of a layer or hierarchy.
    Certify,
    /// Synthesize selective-inhibition controls for a hierarchy.
    Synthesize,
    /// Timescale-ratio sweep of top-down recruitment (--hierarchy, --eps).
    Recruit,
    /// Fit network parameters to rate data (--data, one CSV per condition).
    Fit,
    /// Intrinsic timescale from a trials-by-bins CSV (--data).
    Timescale,
    /// Permutation test between two one-column CSVs (--data a.csv,b.csv).
    Rtest,
    /// Model estimates for fitted parameters (--params, --data).
    Predict,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Equilibrium => "equilibrium",
            Command::Certify => "certify",
            Command::Synthesize => "synthesize",
            Command::Recruit => "recruit",
            Command::Fit => "fit",
            Command::Timescale => "timescale",
            Command::Rtest => "rtest",
            Command::Predict => "predict",
        }
    }
}

#[derive(clap::ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// Every flag can also be set through an `HSR_`-prefixed environment variable.
#[derive(clap::Args, Debug, Clone)]
pub struct Options {
    /// Layer description (JSON).
    #[arg(long, global = true, env = "HSR_NET")]
    pub net: Option<PathBuf>,
    /// Hierarchy description (JSON).
    #[arg(long, global = true, env = "HSR_HIERARCHY")]
    pub hierarchy: Option<PathBuf>,
    /// Control laws (JSON, as written by `synthesize`).
    #[arg(long, global = true, env = "HSR_CONTROLS")]
    pub controls: Option<PathBuf>,
    /// Input data files, comma separated.
    #[arg(long, global = true, env = "HSR_DATA", value_delimiter = ',')]
    pub data: Vec<PathBuf>,
    /// Integration step (default: fastest time constant / 100).
    #[arg(long, global = true, env = "HSR_DT")]
    pub dt: Option<f64>,
    /// Simulation interval `start,end`.
    #[arg(long, global = true, env = "HSR_TSPAN", value_delimiter = ',', allow_hyphen_values = true)]
    pub tspan: Vec<f64>,
    /// Evaluation window `start,end` (default: 2 and 10 slow time constants).
    #[arg(long, global = true, env = "HSR_WINDOW", value_delimiter = ',', allow_hyphen_values = true)]
    pub window: Vec<f64>,
    /// Timescale ratios, strictly decreasing.
    #[arg(long, global = true, env = "HSR_EPS", value_delimiter = ',')]
    pub eps: Vec<f64>,
    /// Seed for every stochastic step; required where randomness is used.
    #[arg(long, global = true, env = "HSR_SEED")]
    pub seed: Option<u64>,
    /// Output directory; reports go to stdout when absent.
    #[arg(long, global = true, env = "HSR_OUT")]
    pub out: Option<PathBuf>,
    /// What to print on stdout when no output directory is given.
    #[arg(long, global = true, env = "HSR_FORMAT", value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Overwrite existing output files.
    #[arg(long, global = true, env = "HSR_FORCE")]
    pub force: bool,
    /// Initial state, all layers stacked (default: zero).
    #[arg(long, global = true, env = "HSR_X0", value_delimiter = ',', allow_hyphen_values = true)]
    pub x0: Vec<f64>,
    /// Constant input at which to evaluate the equilibrium map.
    #[arg(long, global = true, env = "HSR_INPUT", value_delimiter = ',', allow_hyphen_values = true)]
    pub input: Vec<f64>,
    /// Random initial states for the empirical decay check of `certify --net`.
    #[arg(long, global = true, env = "HSR_TRIALS", default_value_t = 0)]
    pub trials: usize,
    /// Network structure for `fit`/`predict` (default: the bundled eight-population network).
    #[arg(long, global = true, env = "HSR_STRUCTURE")]
    pub structure: Option<PathBuf>,
    /// Parameter file for `predict` (a `fit` report or `{"z": [...]}`).
    #[arg(long, global = true, env = "HSR_PARAMS")]
    pub params: Option<PathBuf>,
    /// Number of starts for `fit`.
    #[arg(long, global = true, env = "HSR_STARTS", default_value_t = 32)]
    pub starts: usize,
    /// Iteration cap per start for `fit`.
    #[arg(long, global = true, env = "HSR_ITERS", default_value_t = 400)]
    pub iters: usize,
    /// Stop `fit` after the batch of starts that reaches this R².
    #[arg(long, global = true, env = "HSR_STOP_R2")]
    pub stop_r2: Option<f64>,
    /// Objective weights `gamma1,gamma2`.
    #[arg(long, global = true, env = "HSR_GAMMA", value_delimiter = ',')]
    pub gamma: Vec<f64>,
    /// Bin width of the `timescale` input.
    #[arg(long, global = true, env = "HSR_BIN_WIDTH", default_value_t = 0.2)]
    pub bin_width: f64,
    /// Lags used by the `timescale` fit, `first,last`.
    #[arg(long, global = true, env = "HSR_LAGS", value_delimiter = ',')]
    pub lags: Vec<usize>,
    /// Permutations for `rtest`.
    #[arg(long, global = true, env = "HSR_PERMS", default_value_t = 10_000)]
    pub perms: usize,
}

/// Failure classes mapped to exit codes 2 and 3.
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Numerical(String),
}

impl From<HsrError> for CliError {
    fn from(e: HsrError) -> Self {
        if e.is_validation() {
            CliError::Validation(e.to_string())
        } else {
            CliError::Numerical(e.to_string())
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if std::env::args_os().len() <= 1 {
        let _ = Cli::command().print_help();
        return ExitCode::from(2);
    }
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match commands::run(cli.command, &cli.opts) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(CliError::Numerical(m)) => {
            eprintln!("numerical failure: {m}");
            ExitCode::from(3)
        }
    }
}
