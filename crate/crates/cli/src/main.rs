//! `rgf`: simulate glare-corrupted datasets, train the reliability network,
//! build costmaps and score them.
//!
//! Exit codes: 0 on success, 1 on a runtime failure, 2 on a usage or
//! configuration error.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "rgf", version, about = "Reliability-guided costmaps from glare-corrupted depth")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write a dataset directory.
    Simgen(SimgenArgs),
    /// Train the reliability network on one or more datasets.
    Train(TrainArgs),
    /// Run one method over a dataset and write its grid and costmaps.
    Run(RunArgs),
    /// Score run directories against geometric ground truth.
    Eval(EvalArgs),
    /// Run a full method x severity x seed matrix from a config file.
    Compare(CompareArgs),
}

#[derive(clap::Args)]
pub struct SimgenArgs {
    /// Bundled scenario name or path to a scenario JSON file.
    #[arg(long)]
    pub scenario: String,
    /// Renders every glare patch at this level; authored levels otherwise.
    #[arg(long)]
    pub severity: Option<String>,
    /// Resamples the trajectory to this many frames.
    #[arg(long)]
    pub frames: Option<usize>,
    /// Corruption seed; the scenario's own seed when absent.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(clap::Args)]
pub struct TrainArgs {
    #[arg(long = "dataset", required = true)]
    pub datasets: Vec<PathBuf>,
    /// Training config JSON; flags below override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// `binary` or `soft`.
    #[arg(long)]
    pub target: Option<String>,
    /// Working resolution as `WIDTHxHEIGHT`.
    #[arg(long)]
    pub resolution: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory for `model.drm` and `loss.csv`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(clap::Args)]
pub struct RunArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub method: String,
    /// Trained model file; required for `drm_rgf`.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Shared costmap config JSON (grid, fusion, inflation, baselines).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Also write one reliability PGM per frame.
    #[arg(long)]
    pub dump_reliability: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(clap::Args)]
pub struct EvalArgs {
    #[arg(long = "run", required = true)]
    pub runs: Vec<PathBuf>,
    /// JSON list of `{"start": [x, y], "goal": [x, y]}`; the scenario's
    /// trials otherwise.
    #[arg(long)]
    pub trials: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(clap::Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Model file overriding the config's model or training section.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Output directory overriding the config's.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simgen(a) => commands::simgen(&a),
        Command::Train(a) => commands::train(&a),
        Command::Run(a) => commands::run(&a),
        Command::Eval(a) => commands::eval(&a),
        Command::Compare(a) => commands::compare(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {:#}", e.error);
            ExitCode::from(e.code)
        }
    }
}
