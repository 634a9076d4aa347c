//! `trajkin`: extract kinematic trip features from a Geolife-layout dataset
//! and run the classification and anomaly-detection experiments on them.

mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{RunArgs, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "trajkin", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build features.csv from a dataset root
    Extract(RunArgs),
    /// Decision tree vs. random baselines over stratified folds
    Classify(RunArgs),
    /// LOF anomaly-injection trials vs. a random scorer
    Anomaly(RunArgs),
    /// Write a synthetic corpus in Geolife layout
    Synth(RunArgs),
}

/// Exit status 1 for invalid settings or experiments that cannot run on the
/// given data, 2 for unreadable or missing inputs and write failures.
#[derive(Debug)]
pub enum Failure {
    Invalid(anyhow::Error),
    Input(anyhow::Error),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Invalid(_) => 1,
            Failure::Input(_) => 2,
        }
    }

    fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Invalid(e) | Failure::Input(e) => e,
        }
    }
}

type Handler = fn(&RunConfig) -> Result<(), Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (args, run): (&RunArgs, Handler) = match &cli.command {
        Command::Extract(a) => (a, commands::extract),
        Command::Classify(a) => (a, commands::classify),
        Command::Anomaly(a) => (a, commands::anomaly),
        Command::Synth(a) => (a, commands::synth),
    };
    match RunConfig::resolve(args).and_then(|c| run(&c)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {:#}", failure.error());
            ExitCode::from(failure.exit_code())
        }
    }
}
