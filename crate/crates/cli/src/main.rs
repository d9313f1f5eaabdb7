//! `bbps`: simulate datasets, run samplers and compare their efficiency.

mod commands;
mod config;
mod data;
mod selftest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{message}; state saved to {}", snapshot.display())]
    Aborted { message: String, snapshot: PathBuf },
    #[error("{0}")]
    Numerical(String),
    #[error("self-test failed: {0}")]
    Mismatch(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Core(bbps_core::Error),
}

impl From<bbps_core::Error> for CliError {
    fn from(e: bbps_core::Error) -> Self {
        use bbps_core::Error as E;
        match e {
            E::Config(_) | E::Parameter(_) | E::Shape { .. } | E::Capability(_) | E::Format(_) | E::Json(_) => {
                Self::Config(e.to_string())
            }
            E::Numerical { .. } | E::DegenerateReflection(_) | E::NonFiniteState { .. } => {
                Self::Numerical(e.to_string())
            }
            other => Self::Core(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) => 2,
            Self::Aborted { .. } | Self::Numerical(_) => 3,
            Self::Mismatch(_) => 4,
            Self::Io(_) | Self::Core(_) => 1,
        }
    }
}

#[derive(Parser)]
#[command(name = "bbps", version, about = "Blocked bouncy particle samplers for state space smoothing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Overrides applied on top of the JSON config.
#[derive(clap::Args, Clone, Debug, Default)]
pub struct Overrides {
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Sampler seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Data simulation seed.
    #[arg(long)]
    pub data_seed: Option<u64>,
    /// Worker threads for even-odd updates.
    #[arg(long)]
    pub parallelism: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a dataset (y.csv, x_true.csv and, for SV, gamma.csv).
    SimulateData {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run a sampler and write events, samples and diagnostics.
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Compare completed runs on the same dataset.
    Compare {
        #[arg(required = true, num_args = 2..)]
        runs: Vec<PathBuf>,
        /// Report path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check samplers and oracles against each other on small problems.
    SelfTest,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::SimulateData { config, overrides } => commands::simulate_data(&config, &overrides),
        Command::Run { config, overrides } => commands::run(&config, &overrides),
        Command::Compare { runs, out } => commands::compare(&runs, out.as_deref()),
        Command::SelfTest => selftest::run(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
