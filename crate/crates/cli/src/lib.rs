//! Front end for solves, verification suites, cone checks and barrier checks.
//!
//! Exit codes: 0 success, 2 nonconvergence or violated checks, 1 configuration
//! or validation errors.

pub mod config;

mod barrier;
mod cone_check;
mod output;
mod solve;
mod verify;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use config::RunConfig;
pub use output::Output;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_FAILED: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "mhess", version, about = "m-Hessian cone calculus, verification suites and Neumann solver")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Continuation solve of the Neumann problem; writes the solution and a run manifest.
    Solve(CommonArgs),
    /// Sampled identity and inequality suites.
    Verify(CommonArgs),
    /// Cone membership of Hessians or spectra read from a CSV file.
    ConeCheck(CommonArgs),
    /// Distance-barrier bounds on a ball collar.
    BarrierCheck(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Key-value config file, or a run manifest to replay.
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config `seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "mhess-out")]
    pub out_dir: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    Core(mhess::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<mhess::Error> for CliError {
    fn from(e: mhess::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// Exit code for a failed core operation.
pub fn core_exit_code(e: &mhess::Error) -> i32 {
    use mhess::Error::*;
    match e {
        Range { .. } | Argument(_) | Config(_) | Validation(_) | Collar { .. } => EXIT_CONFIG,
        Numeric(_) | Inadmissible { .. } | NonConvergence { .. } | Continuation { .. } | SamplerStarved { .. } => {
            EXIT_FAILED
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => EXIT_CONFIG,
            CliError::Core(e) => core_exit_code(e),
        }
    }
}

/// Runs one command; the effective seed is written back into the config.
pub fn run(cli: Cli) -> Result<i32, CliError> {
    let (name, args) = match &cli.command {
        Command::Solve(a) => ("solve", a),
        Command::Verify(a) => ("verify", a),
        Command::ConeCheck(a) => ("cone-check", a),
        Command::BarrierCheck(a) => ("barrier-check", a),
    };
    let mut cfg = RunConfig::load(&args.config)?;
    let seed = match args.seed {
        Some(s) => s,
        None => cfg.get_or("seed", 0u64)?,
    };
    cfg.set("seed", seed.to_string());
    let out = Output::new(&args.out_dir, args.format, name, &cfg, seed)?;
    match cli.command {
        Command::Solve(_) => solve::run(&cfg, &out),
        Command::Verify(_) => verify::run(&cfg, &out, seed),
        Command::ConeCheck(_) => cone_check::run(&cfg, &out),
        Command::BarrierCheck(_) => barrier::run(&cfg, &out),
    }
}
