//! `mm`: reproducible manifold matching experiments from the command line.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

impl From<mmatch::Error> for CliError {
    fn from(e: mmatch::Error) -> Self {
        use mmatch::Error as E;
        match e {
            E::InvalidParams(_) | E::InvalidPolicy(_) | E::AlphaOutOfRange(_) | E::DimensionOutOfRange { .. } | E::TooFewValues(_) => {
                CliError::Config(e.to_string())
            }
            E::NumericFailure(_)
            | E::DegenerateCovariance { .. }
            | E::RankDeficient { .. }
            | E::DisconnectedWeights { .. }
            | E::AllWeightsZero => CliError::Numeric(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "mm", version, about = "Manifold matching: joint embeddings and matchedness tests")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML configuration file; its values override the preset.
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    /// Built-in configuration: fig5, fig7 (power), fig8 (diagnose), ranking (rank).
    #[arg(long)]
    pub preset: Option<String>,
    /// Master seed. Falls back to the config file, then to MM_SEED, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for replicate-level parallelism (0 = all cores).
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Output directory.
    #[arg(long, short, default_value = "mm-out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct MatrixInputs {
    /// Condition-1 dissimilarity matrix (CSV or JSON).
    #[arg(long)]
    pub d1: PathBuf,
    /// Condition-2 dissimilarity matrix (CSV or JSON).
    #[arg(long)]
    pub d2: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a matched synthetic dataset.
    Simulate(Common),
    /// Monte Carlo power curves for several matchers.
    Power(Common),
    /// Rank of the true match among held-out candidates.
    Rank(Common),
    /// Test whether one new pair of observations is matched.
    Test {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        inputs: MatrixInputs,
        /// Dissimilarities of the first new observation to the condition-1 objects.
        #[arg(long)]
        u1: PathBuf,
        /// Dissimilarities of the second new observation to the condition-2 objects.
        #[arg(long)]
        v2: PathBuf,
    },
    /// Grassmannian diagnostic of the separate-embedding baseline.
    Diagnose(Common),
    /// Fit a matcher and export its anchor configurations.
    Embed {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        inputs: MatrixInputs,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(c) => commands::simulate(&c),
        Command::Power(c) => commands::power(&c),
        Command::Rank(c) => commands::rank(&c),
        Command::Test { common, inputs, u1, v2 } => commands::test(&common, &inputs, &u1, &v2),
        Command::Diagnose(c) => commands::diagnose(&c),
        Command::Embed { common, inputs } => commands::embed(&common, &inputs),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mm: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
