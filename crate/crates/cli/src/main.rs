//! `ngik`: dataset generation, model training, solving, evaluation and
//! benchmarking for the neuro-genetic IK toolkit.

mod commands;
mod common;
mod manifest;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "ngik",
    version,
    about = "Neuro-genetic inverse kinematics toolkit",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a pose/configuration dataset and split it into
    /// train/test/validation files.
    GenData(commands::gen_data::Args),
    /// Train the single-solution regressor.
    TrainMlp(commands::train::MlpArgs),
    /// Train the multi-solution noise-conditioned generator.
    TrainGan(commands::train::GanArgs),
    /// Solve one target pose with a trained model.
    Solve(commands::solve::Args),
    /// Evaluate a model over a dataset's test split.
    Eval(commands::eval::Args),
    /// Measure solve runtimes.
    Bench(commands::bench::Args),
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenData(args) => commands::gen_data::run(args),
        Command::TrainMlp(args) => commands::train::run_mlp(args),
        Command::TrainGan(args) => commands::train::run_gan(args),
        Command::Solve(args) => commands::solve::run(args),
        Command::Eval(args) => commands::eval::run(args),
        Command::Bench(args) => commands::bench::run(args),
    };
    if let Err(e) = result {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
