//! `rcm`: command-line driver for the rcm-core experiments.
//!
//! Every subcommand reads a flat `key = value` config file, writes CSV
//! tables plus a `manifest.txt` into `--out-dir`, and exits with 0 on
//! success, 2 on usage errors, 3 when a resource guard refuses the run and 1
//! on any other failure.

mod commands;
mod config;
mod output;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::Config;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Refused(String),
    Other(anyhow::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Refused(_) => 3,
            CliError::Other(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Refused(m) => write!(f, "refused: {m}"),
            CliError::Other(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<rcm_core::Error> for CliError {
    fn from(e: rcm_core::Error) -> Self {
        use rcm_core::Error as E;
        match e {
            E::TooLarge(_) => CliError::Refused(e.to_string()),
            E::InvalidParameter(_) | E::UnsupportedParameter(_) | E::Parse(_) => CliError::Usage(e.to_string()),
            other => CliError::Other(other.into()),
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Other(e)
    }
}

#[derive(Parser)]
#[command(name = "rcm", version, about = "Random cluster model experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Run configuration (`key = value` lines, `#` comments).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the `seed` key.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Overrides the `chains` key.
    #[arg(long)]
    chains: Option<usize>,
    /// Largest edge count for which exact enumeration is attempted.
    #[arg(long, default_value_t = 24)]
    max_edges_enumerate: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Unconditioned sampling: two-point connectivity, arm decay and mixing.
    #[command(after_help = commands::SAMPLE_HELP)]
    Sample(Common),
    /// Correlation-length table, Wulff shape and its angular constants.
    #[command(after_help = commands::WULFF_HELP)]
    Wulff(Common),
    /// Area-conditioned chain and the tail diagnostics of its circuits.
    #[command(after_help = commands::CONDITION_HELP)]
    Condition(Common),
    /// Independence of stored and resampled sector configurations.
    #[command(name = "surgery-check", after_help = commands::SURGERY_HELP)]
    SurgeryCheck(Common),
    /// Sampler against exact enumeration on a tiny box.
    #[command(after_help = commands::ORACLE_HELP)]
    Oracle(Common),
    /// Randomised checks of the geometric primitives.
    #[command(name = "geom-test", after_help = commands::GEOM_HELP)]
    GeomTest(Common),
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (common, f): (Common, fn(&mut Config, &Common) -> Result<output::Outcome, CliError>) = match cli.command {
        Command::Sample(c) => (c, commands::sample),
        Command::Wulff(c) => (c, commands::wulff),
        Command::Condition(c) => (c, commands::condition),
        Command::SurgeryCheck(c) => (c, commands::surgery_check),
        Command::Oracle(c) => (c, commands::oracle),
        Command::GeomTest(c) => (c, commands::geom_test),
    };
    let mut cfg = match &common.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(s) = common.seed {
        cfg.set("seed", s);
    }
    if let Some(c) = common.chains {
        cfg.set("chains", c);
    }
    let started = std::time::Instant::now();
    let outcome = f(&mut cfg, &common)?;
    output::finish(&common.out_dir, &cfg, &outcome, started.elapsed())?;
    match outcome.failure {
        Some(f) => Err(CliError::Other(anyhow::anyhow!(f))),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rcm: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
