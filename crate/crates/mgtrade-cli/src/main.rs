//! `mgtrade` command-line interface.
//!
//! Subcommands: `nash` (closed-form equilibria with numerical verification),
//! `train` / `eval` (learning-agent runs and frozen-checkpoint evaluation),
//! `sweep` (battery-capacity and price-ratio grids), and `synth` (bundled
//! synthetic traces).
//!
//! Exit codes: 0 success/verified, 1 operational error, 2 verification
//! failure.

mod commands;
mod manifest;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "mgtrade", version, about = "Microgrid energy-trading toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute and verify the closed-form equilibrium of one game state.
    Nash(commands::nash::NashArgs),
    /// Run the trading loop with learning agents and write checkpoints.
    Train(commands::train::TrainArgs),
    /// Evaluate frozen checkpoints; metrics only.
    Eval(commands::eval::EvalArgs),
    /// Grid over battery capacity and price ratio.
    Sweep(commands::sweep::SweepArgs),
    /// Write bundled synthetic traces.
    Synth(commands::synth::SynthArgs),
}

fn main() {
    env_logger::init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Nash(args) => commands::nash::run(args),
        Command::Train(args) => commands::train::run(args),
        Command::Eval(args) => commands::eval::run(args),
        Command::Sweep(args) => commands::sweep::run(args),
        Command::Synth(args) => commands::synth::run(args),
    };
    match result {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(1);
        }
    }
}
