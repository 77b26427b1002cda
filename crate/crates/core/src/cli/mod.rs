//! The `ffpn` command-line tool: dataset generation, reconstruction with
//! every method, training and evaluation.
//!
//! Exit codes: 0 on success, 1 for usage and I/O errors, 2 for numerical
//! failures.

mod commands;
pub mod config;
pub mod dataset;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

use crate::error::Error;
use crate::geometry::NoiseModel;
use crate::regularizer::ActivationPlacement;
use config::RunConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "ffpn", version, about = "Sparse-view CT reconstruction with fixed-point networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate ellipse phantoms and noisy sinograms.
    GenData(GenDataArgs),
    /// Reconstruct the test split with one method and score it.
    Reconstruct(ReconstructArgs),
    /// Train the regularizer with Jacobian-free backpropagation.
    Train(TrainArgs),
    /// Score predicted images against ground truth.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct GenDataArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub n_train: usize,
    #[arg(long, default_value_t = 50)]
    pub n_test: usize,
    #[arg(long, default_value_t = 32)]
    pub side: usize,
    #[arg(long, default_value_t = 15)]
    pub angles: usize,
    #[arg(long, default_value_t = 45)]
    pub beams: usize,
    /// Relative noise level of each measurement.
    #[arg(long, default_value_t = 0.015)]
    pub noise: f64,
    #[arg(long, default_value_t = NoiseModel::PerRay, value_parser = parse_noise_model)]
    pub noise_model: NoiseModel,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Drop,
    Tvs,
    Tvm,
    Ffpn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Train,
    Test,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct ReconstructArgs {
    #[arg(long, value_enum)]
    pub method: Method,
    #[arg(long)]
    pub data: PathBuf,
    /// Output directory for reconstructions and metric tables.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = SplitArg::Test)]
    pub split: SplitArg,
    /// Trained weights (required for ffpn).
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// DROP relaxation λ.
    #[arg(long, default_value_t = 1.0)]
    pub relaxation: f64,
    /// Iteration count (drop/tvs: 20, tvm: 250).
    #[arg(long)]
    pub iters: Option<usize>,
    /// TVS perturbation scale or ADMM dual step.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// TVS decay or ADMM primal step.
    #[arg(long)]
    pub beta: Option<f64>,
    /// ADMM proximal step.
    #[arg(long, default_value_t = 0.1)]
    pub lambda: f64,
    /// ADMM data-ball radius; estimated from the training split when absent.
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long, default_value_t = 1e-7)]
    pub eps_stab: f64,
    /// Grid-search the TVS parameters on the training split.
    #[arg(long, default_value_t = false, action = clap::ArgAction::Set)]
    pub tune: bool,
    /// Training samples used for tuning and ε estimation.
    #[arg(long, default_value_t = 30)]
    pub tune_samples: usize,
    #[arg(long, default_value_t = crate::ffpn::EVAL_DELTA)]
    pub delta: f64,
    #[arg(long, default_value_t = crate::ffpn::EVAL_MAX_ITER)]
    pub max_iter: usize,
    /// Write per-image ADMM traces as CSV.
    #[arg(long, default_value_t = false, action = clap::ArgAction::Set)]
    pub traces: bool,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Output weights file (FWTS).
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 50)]
    pub epochs: usize,
    #[arg(long, default_value_t = 15)]
    pub batch: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = crate::ffpn::TRAIN_DELTA)]
    pub delta: f64,
    #[arg(long, default_value_t = crate::ffpn::TRAIN_MAX_ITER)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 0.9)]
    pub beta1: f64,
    #[arg(long, default_value_t = 0.999)]
    pub beta2: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub adam_eps: f64,
    #[arg(long, default_value_t = crate::regularizer::DESK_WIDTH)]
    pub width: usize,
    #[arg(long, default_value_t = ActivationPlacement::Interior, value_parser = parse_placement)]
    pub placement: ActivationPlacement,
    #[arg(long, default_value_t = 1.0)]
    pub relaxation: f64,
    /// Training log CSV (default: the weights path with `.log.csv`).
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Write a checkpoint every N epochs (0 disables).
    #[arg(long, default_value_t = 0)]
    pub checkpoint_every: usize,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct EvalArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub truth: PathBuf,
    /// Write the CSV here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

fn parse_noise_model(s: &str) -> Result<NoiseModel, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_placement(s: &str) -> Result<ActivationPlacement, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn config_path(cmd: &Command) -> Option<&PathBuf> {
    match cmd {
        Command::GenData(a) => a.config.as_ref(),
        Command::Reconstruct(a) => a.config.as_ref(),
        Command::Train(a) => a.config.as_ref(),
        Command::Eval(a) => a.config.as_ref(),
    }
}

fn subcommand_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::GenData(_) => "gen-data",
        Command::Reconstruct(_) => "reconstruct",
        Command::Train(_) => "train",
        Command::Eval(_) => "eval",
    }
}

/// Parses the arguments, folding in the `--config` file when given. Config
/// entries are appended after the flags, so they take precedence.
pub fn parse_args(args: Vec<OsString>) -> Result<Cli, CliError> {
    let cli = Cli::try_parse_from(&args).map_err(CliError::Clap)?;
    let Some(path) = config_path(&cli.command).cloned() else {
        return Ok(cli);
    };
    let cfg = RunConfig::read(&path).map_err(CliError::Lib)?;
    let name = subcommand_name(&cli.command);
    let root = Cli::command();
    let sub = root
        .find_subcommand(name)
        .expect("subcommand exists");
    let allowed: Vec<String> = sub
        .get_arguments()
        .filter_map(|a| a.get_long().map(str::to_string))
        .collect();
    let mut merged = args;
    merged.extend(cfg.to_args(&allowed).map_err(CliError::Lib)?);
    Cli::try_parse_from(&merged).map_err(CliError::Clap)
}

#[derive(Debug)]
pub enum CliError {
    Clap(clap::Error),
    Lib(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Clap(e) if !e.use_stderr() => EXIT_OK,
            CliError::Clap(_) => EXIT_USAGE,
            CliError::Lib(e) if e.is_numerical() => EXIT_NUMERICAL,
            CliError::Lib(_) => EXIT_USAGE,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

/// Runs the tool on explicit arguments (program name first) and returns the
/// process exit code.
pub fn run_with(args: Vec<OsString>) -> i32 {
    let result = parse_args(args).and_then(|cli| commands::execute(cli.command).map_err(CliError::Lib));
    match result {
        Ok(()) => EXIT_OK,
        Err(err) => {
            match &err {
                CliError::Clap(e) => {
                    let _ = e.print();
                }
                CliError::Lib(e) => eprintln!("error: {e}"),
            }
            err.exit_code()
        }
    }
}

pub fn run() -> i32 {
    run_with(std::env::args_os().collect())
}
