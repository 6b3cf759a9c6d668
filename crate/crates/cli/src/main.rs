//! `fefet-am`: compile distance functions onto multi-FeFET cells and
//! simulate search on the resulting arrays.

mod commands;
mod config;
mod error;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use config::{RunConfig, THREADS_ENV};
use error::{exit, CliError};

#[derive(Debug, Parser)]
#[command(name = "fefet-am", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    config: RunConfig,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Print a distance matrix as CSV.
    Dm,
    /// Find the smallest cell for a distance matrix and write its encoding.
    Compile,
    /// Check an encoding against a distance matrix.
    Verify,
    /// Search stored vectors with queries and write row currents.
    Simulate,
    /// Monte-Carlo search accuracy under device variation.
    Mc,
    /// KNN or HDC classification on a dataset.
    Bench,
    /// Exhaustive feasibility check at a fixed cell size.
    Oracle,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Dm => "dm",
            Command::Compile => "compile",
            Command::Verify => "verify",
            Command::Simulate => "simulate",
            Command::Mc => "mc",
            Command::Bench => "bench",
            Command::Oracle => "oracle",
        }
    }
}

fn threads(cfg: &RunConfig) -> Result<Option<usize>, CliError> {
    if let Some(n) = cfg.threads {
        return Ok(Some(n));
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Usage(format!("{THREADS_ENV}={v:?} is not a count"))),
        Err(_) => Ok(None),
    }
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let mut cfg = cli.config.merged()?;
    cfg.command = Some(cli.command.name().to_string());
    if let Some(n) = threads(&cfg)? {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Failed(e.to_string()))?;
    }
    match cli.command {
        Command::Dm => commands::dm(&cfg),
        Command::Compile => commands::compile(&cfg),
        Command::Verify => commands::verify(&cfg),
        Command::Simulate => commands::simulate(&cfg),
        Command::Mc => commands::mc(&cfg),
        Command::Bench => commands::bench(&cfg),
        Command::Oracle => commands::oracle(&cfg),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => exit::OK,
                _ => exit::USAGE,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}
