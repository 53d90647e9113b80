//! Experiment front-end behind the `wser` binary.

pub mod commands;
pub mod config;
pub mod csv;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{ExperimentConfig, Mode, Seeds};

use crate::error::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "wser", version, about = "Joint signal enhancement and modulation recognition experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the configured dataset and write it to OUT/dataset.fwsr.
    GenData(CommonArgs),
    /// Train the recognizer (central_wsr) or the joint network (central_wser).
    TrainCentral(TrainArgs),
    /// Run a federated simulation.
    TrainFed(TrainArgs),
    /// Evaluate a checkpoint on the test split (or a whole dataset file).
    Evaluate(EvalArgs),
    /// Print the per-layer summary of the configured network.
    Summarize(SummarizeArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; defaults to `output_dir` from the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Replace a seed, e.g. `--seed-override model=7`. Repeatable.
    #[arg(long = "seed-override", value_name = "NAME=VALUE")]
    pub seed_override: Vec<String>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Read frames from a dataset file instead of generating them.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Clients trained concurrently.
    #[arg(long = "max-parallel", default_value_t = 1)]
    pub max_parallel: usize,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Evaluate every frame of this dataset file instead of the test split.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Restrict the confusion matrix to one SNR (dB).
    #[arg(long = "confusion-snr", allow_negative_numbers = true)]
    pub confusion_snr: Option<f64>,
    /// Which split of the generated dataset to evaluate.
    #[arg(long, value_enum, default_value_t = Split::Test)]
    pub split: Split,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Split {
    Train,
    Test,
    All,
}

#[derive(Debug, Args)]
pub struct SummarizeArgs {
    #[arg(long)]
    pub config: PathBuf,
}

impl CommonArgs {
    /// Loads the config and applies seed overrides.
    pub fn load(&self) -> Result<(ExperimentConfig, PathBuf)> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        for item in &self.seed_override {
            let (name, value) = item
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("seed override '{item}' is not NAME=VALUE")))?;
            let value: u64 =
                value.trim().parse().map_err(|_| Error::Config(format!("seed value '{value}' is not an integer")))?;
            cfg.seeds.set(name.trim(), value)?;
        }
        let out = self
            .out
            .clone()
            .or_else(|| cfg.output_dir.clone())
            .ok_or_else(|| Error::Config("no output directory: pass --out or set output_dir".into()))?;
        std::fs::create_dir_all(&out)?;
        Ok((cfg, out))
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenData(a) => commands::gen_data(&a),
        Command::TrainCentral(a) => commands::train_central(&a),
        Command::TrainFed(a) => commands::train_fed(&a),
        Command::Evaluate(a) => commands::evaluate(&a),
        Command::Summarize(a) => commands::summarize(&a),
    }
}
