//! Command-line harness for the synthetic regret experiments, standalone
//! structure learning and the variance/information-gain analysis.

pub mod commands;
pub mod config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{run, CliError};
pub use config::{parse_config, ConfigError, ExperimentConfig, Preset};

#[derive(Debug, Parser)]
#[command(name = "addbo", version, about = "Additive-GP Bayesian optimization experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run BO on synthetic functions and write regret and graph-accuracy CSVs.
    Synth(CommonArgs),
    /// Learn a dependency graph and lengthscales from a data CSV.
    Learn {
        #[command(flatten)]
        common: CommonArgs,
        /// Data file with columns x_1..x_D,y (overrides `data` in the config).
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Scan the variance approximation gap and the greedy information gain.
    Analyze(CommonArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Configuration file with `key = value` lines.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub runs: Option<usize>,
    /// Comma-separated modes (synth) or the learning mode (learn).
    #[arg(long)]
    pub mode: Option<String>,
}
