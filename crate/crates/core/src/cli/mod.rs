//! Command-line front end: argument parsing, job-pool setup and exit codes.
//!
//! Exit codes: 0 success, 1 a check failed (or the run failed at runtime),
//! 2 configuration or usage error, 3 oracle incompatible with the instance.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::error::Error;
pub use commands::{cmd_estimate_regularity, cmd_init_study, cmd_run, cmd_sweep, cmd_verify_lemmas, Status};
pub use config::ExperimentConfig;
use output::Outputs;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_ORACLE: i32 = 3;

/// Env var read when `--jobs` is absent.
pub const JOBS_ENV: &str = "RELU_GD_LAB_JOBS";

#[derive(Debug, Parser)]
#[command(name = "relu-gd-lab", version, about = "Gradient descent experiments for a single ReLU neuron with bias")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML experiment config (defaults apply when omitted).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides [output] dir).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Master seed (overrides master_seed).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true, env = JOBS_ENV)]
    pub jobs: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// GD with restarts on the [instance] problem.
    Run,
    /// Cross product of the [sweep] lists, with per-dimension aggregates.
    Sweep,
    /// Numerical lemma sweeps; exits 1 on any non-vacuous violation.
    VerifyLemmas,
    /// Regularity constants of the [regularity] families.
    EstimateRegularity,
    /// Initialization success rates.
    InitStudy,
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_)
        | Error::InvalidParameter(_)
        | Error::DimensionMismatch { .. }
        | Error::NonUnitDirection { .. }
        | Error::NotOrthogonal { .. }
        | Error::InsufficientBinSamples { .. }
        | Error::EmptyDataset => EXIT_CONFIG,
        Error::OracleIncompatible(_) => EXIT_ORACLE,
        Error::NonFinite(_) | Error::Io(_) => EXIT_FAILURE,
    }
}

/// Runs a parsed command line; returns the process exit code.
pub fn execute(cli: &Cli) -> i32 {
    let mut cfg = match &cli.config {
        Some(p) => match ExperimentConfig::load(p) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return exit_code(&e);
            }
        },
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.master_seed = s;
    }
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cli.jobs {
        if j == 0 {
            eprintln!("error: --jobs must be >= 1");
            return EXIT_CONFIG;
        }
        pool = pool.num_threads(j);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return EXIT_FAILURE;
        }
    };
    let out = match Outputs::new(&dir) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    let result = pool.install(|| match cli.command {
        Command::Run => cmd_run(&cfg, &out),
        Command::Sweep => cmd_sweep(&cfg, &out),
        Command::VerifyLemmas => cmd_verify_lemmas(&cfg, &out),
        Command::EstimateRegularity => cmd_estimate_regularity(&cfg, &out),
        Command::InitStudy => cmd_init_study(&cfg, &out),
    });
    match result {
        Ok(Status::Success) => EXIT_OK,
        Ok(Status::Violation) => EXIT_FAILURE,
        Err(e) => {
            out.cleanup();
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Parses `args` (program name first) and runs; usage errors exit 2.
pub fn main_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(&cli),
        Err(e) => {
            let _ = e.print();
            match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_CONFIG,
            }
        }
    }
}
