use std::fmt;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod files;
mod overlay;

use config::{Flags, Settings};

/// Sparse flow trajectories from image sequences.
#[derive(Debug, Parser)]
#[command(name = "sparseflow", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Dense flow for every consecutive frame pair
    Flow,
    /// Sample keypoints and propagate them through the flow
    Track,
    /// Smoothed sparse conditioning maps from trajectories
    Condition,
    /// Render a synthetic scene with its ground truth
    Synth,
    /// Score flow and trajectories against ground truth
    Eval,
    /// Draw trajectories onto the input frames
    Overlay,
}

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or missing inputs. Exit code 2.
    Usage(String),
    /// I/O or computation failure. Exit code 1.
    Failed(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Failed(m) => f.write_str(m),
        }
    }
}

impl From<sparseflow::Error> for CliError {
    fn from(e: sparseflow::Error) -> Self {
        CliError::Failed(e.to_string())
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let settings = Settings::resolve(&cli.flags)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(settings.threads)
        .build()
        .map_err(|e| CliError::Failed(format!("thread pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::Flow => commands::flow(&settings),
        Command::Track => commands::track(&settings),
        Command::Condition => commands::condition(&settings),
        Command::Synth => commands::synth(&settings),
        Command::Eval => commands::eval(&settings),
        Command::Overlay => commands::overlay(&settings),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sparseflow: {e}");
            match e {
                CliError::Usage(_) => ExitCode::from(2),
                CliError::Failed(_) => ExitCode::from(1),
            }
        }
    }
}
