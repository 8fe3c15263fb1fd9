//! `quadtune`: train, evaluate, compare and roll out hover policies.

mod commands;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use quadtune::Error;

#[derive(Parser)]
#[command(name = "quadtune", version, about = "Reward-shaped PPO hover controllers for a quadrotor")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one policy per seed and plot the learning curves.
    Train(TrainArgs),
    /// Run evaluation trials for a checkpoint and summarize step-response metrics.
    Evaluate(EvaluateArgs),
    /// Overlay responses and motor speeds of several checkpoints on matched initial states.
    Compare(CompareArgs),
    /// Log a single deterministic episode to CSV.
    Rollout(RolloutArgs),
}

/// Experiment source shared by the commands that build an environment.
#[derive(Args, Clone)]
struct ConfigArgs {
    /// Experiment config file (TOML).
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in preset: acrobatic, baseline or inspection.
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    source: ConfigArgs,
    /// Train a single seed.
    #[arg(long, conflicts_with = "seeds")]
    seed: Option<u64>,
    /// Number of seeds (0..N) or a comma-separated list.
    #[arg(long)]
    seeds: Option<String>,
    /// Override the total timestep budget.
    #[arg(long)]
    timesteps: Option<u64>,
    /// Output root directory.
    #[arg(long, env = "QUADTUNE_OUT")]
    out: Option<PathBuf>,
    /// Continue from a checkpoint (single seed only).
    #[arg(long)]
    resume: Option<PathBuf>,
    /// Suppress per-iteration progress lines.
    #[arg(long)]
    quiet: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Checkpoint to evaluate.
    #[arg(long)]
    checkpoint: PathBuf,
    /// Require the checkpoint to have been trained with this preset.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Trial length in seconds.
    #[arg(long, default_value_t = 10.0)]
    horizon: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output root directory.
    #[arg(long, env = "QUADTUNE_OUT")]
    out: Option<PathBuf>,
    /// Settling band as a fraction of the step magnitude.
    #[arg(long, default_value_t = 0.02)]
    band: f64,
    /// Steady-state averaging window in seconds.
    #[arg(long, default_value_t = 1.0)]
    window: f64,
    /// Overshoot (percent) still counted as none.
    #[arg(long, default_value_t = 2.0)]
    zero_overshoot_tolerance: f64,
    /// Skip writing per-trial trajectory CSVs.
    #[arg(long)]
    no_trajectories: bool,
}

#[derive(Args)]
struct CompareArgs {
    /// Checkpoints to compare (at least two).
    #[arg(long = "checkpoint", required = true, num_args = 1..)]
    checkpoints: Vec<PathBuf>,
    /// Matched random tests per checkpoint.
    #[arg(long, default_value_t = 5)]
    tests: usize,
    #[arg(long, default_value_t = 10.0)]
    horizon: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output root directory.
    #[arg(long, env = "QUADTUNE_OUT")]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum BuiltinController {
    Hover,
    Random,
}

#[derive(Args)]
struct RolloutArgs {
    /// Policy checkpoint; its stored experiment defines the environment.
    #[arg(long, conflicts_with_all = ["controller", "config", "preset"])]
    checkpoint: Option<PathBuf>,
    /// Built-in controller instead of a policy.
    #[arg(long, value_enum)]
    controller: Option<BuiltinController>,
    #[command(flatten)]
    source: ConfigArgs,
    /// Episode length in seconds.
    #[arg(long, default_value_t = 10.0)]
    duration: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output root directory.
    #[arg(long, env = "QUADTUNE_OUT")]
    out: Option<PathBuf>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config { .. } | Error::Usage(_) => 2,
        Error::NumericalDivergence { .. } => 4,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(a) => commands::train(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Compare(a) => commands::compare(a),
        Command::Rollout(a) => commands::rollout(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
