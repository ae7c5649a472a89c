//! Command-line front end.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::{Command, ConfigFile, ExperimentConfig, Overrides};
use crate::experiments::*;
use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "shotlearn", version, about = "Learning circuit outputs from finite-shot labels: experiment harness")]
pub struct Cli {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Master seed; overrides the file.
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Output directory; overrides the file.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Use the full-size grids instead of the smoke-scale defaults.
    #[arg(long, global = true)]
    pub paper_scale: bool,
    /// Worker threads (default: one per core).
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Generate a random target circuit and its Fourier series.
    Target {
        /// Number of data-encoding layers.
        #[arg(long)]
        layers: Option<usize>,
    },
    /// Train and evaluate a single model.
    Learn,
    /// Risk over a grid of training-set sizes and shot counts.
    SweepAsymmetry,
    /// Risk versus training-set size with one shot per label.
    SingleShotScaling,
    /// Bias and variance of model ensembles, with and without the clipping link.
    BiasVariance,
    /// Risk under a fixed total shot budget.
    Tradeoff,
    /// Closed-form risk-bound curves.
    Bounds,
}

impl Cmd {
    fn command(&self) -> Command {
        match self {
            Cmd::Target { .. } => Command::Target,
            Cmd::Learn => Command::Learn,
            Cmd::SweepAsymmetry => Command::SweepAsymmetry,
            Cmd::SingleShotScaling => Command::SingleShotScaling,
            Cmd::BiasVariance => Command::BiasVariance,
            Cmd::Tradeoff => Command::Tradeoff,
            Cmd::Bounds => Command::Bounds,
        }
    }
}

/// Resolves the configuration and runs the chosen command.
pub fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let layers = match cli.command {
        Cmd::Target { layers } => layers,
        _ => None,
    };
    let over = Overrides { seed: cli.seed, out_dir: cli.out.clone(), layers, paper_scale: cli.paper_scale };
    let cfg = ExperimentConfig::resolve(cli.command.command(), file, &over)?;
    let jobs = cli.jobs.unwrap_or(0);
    log::info!("running {} into {}", cfg.command, cfg.out_dir.display());
    match cfg.command {
        Command::Target => cmd_target(&cfg).map(drop),
        Command::Learn => cmd_learn(&cfg).map(drop),
        Command::SweepAsymmetry => cmd_sweep_asymmetry(&cfg, jobs).map(drop),
        Command::SingleShotScaling => cmd_single_shot_scaling(&cfg, jobs).map(drop),
        Command::BiasVariance => cmd_bias_variance(&cfg, jobs).map(drop),
        Command::Tradeoff => cmd_tradeoff(&cfg, jobs).map(drop),
        Command::Bounds => cmd_bounds(&cfg).map(drop),
    }
}
