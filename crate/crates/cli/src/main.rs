//! Command-line front end for the gamma/hadron separation toolkit.

mod commands;
mod manifest;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "gammasep",
    version,
    about = "Gamma/hadron event classification: synthetic data, MLP and SOM training, hybrid experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic gamma / hadron / ON event files
    Synth(commands::SynthArgs),
    /// Train the MLP classifier on labeled gamma and hadron events
    TrainMlp(commands::TrainMlpArgs),
    /// Train a self-organizing map on unlabeled ON events
    TrainSom(commands::TrainSomArgs),
    /// Run the SOM-then-MLP hybrid with a direct-MLP comparison report
    Hybrid(commands::HybridArgs),
    /// Classify events with a saved model, one line per event to stdout
    Classify(commands::ClassifyArgs),
    /// Recompute U-matrix artifacts from a saved codebook
    Umatrix(commands::UmatrixArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Synth(args) => commands::synth(args),
        Command::TrainMlp(args) => commands::train_mlp(args),
        Command::TrainSom(args) => commands::train_som(args),
        Command::Hybrid(args) => commands::hybrid(args),
        Command::Classify(args) => commands::classify(args),
        Command::Umatrix(args) => commands::umatrix(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
