use std::path::PathBuf;
use std::process::ExitCode;

use cantorlab::Error;
use clap::{Parser, Subcommand};
use serde::Serialize;

mod commands;
mod output;
mod repro;

use output::Format;

#[derive(Parser, Debug)]
#[command(name = "cantorlab", version, about = "Exact Cantor-set attractors, covering counts and dimensions")]
struct Cli {
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[arg(long, global = true, value_enum, default_value = "json")]
    format: Format,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Evaluate the IFS maps.
    #[command(subcommand)]
    Map(commands::MapCommand),
    /// Check the bi-Lipschitz criterion up to a depth.
    Bilip(commands::BilipArgs),
    /// Count the covering family at one scale.
    Count(commands::CountArgs),
    /// Theoretical and empirical dimensions.
    Dims(commands::DimsArgs),
    /// The expanding map built from the IFS.
    #[command(subcommand)]
    Dynamics(commands::DynamicsCommand),
    /// Slopes over a range of scales.
    Sweep(commands::SweepArgs),
    /// Run a named reproduction recipe (`list` shows them).
    Repro(repro::ReproArgs),
}

/// An error with its exit status.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }

    pub fn model(message: impl Into<String>) -> Self {
        Failure { code: 3, message: message.into() }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Failure { code: 5, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidParameter(_)
            | Error::InvalidWord(_)
            | Error::EmptyWord
            | Error::Config(_)
            | Error::DomainError(_)
            | Error::OutOfDomain(_)
            | Error::UnsupportedPrefix(_) => 2,
            Error::ModelInvalid(_) | Error::UnsupportedModel(_) | Error::DeltaTooLarge(_) | Error::PrecondFailed(_) => 3,
            Error::TooLarge { .. } | Error::DepthExceeded(_) => 4,
        };
        Failure { code, message: e.to_string() }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::config("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::internal(e.to_string()))?;
    }
    let (name, model, out) = match &cli.command {
        Command::Map(c) => commands::map(c)?,
        Command::Bilip(a) => commands::bilip(a)?,
        Command::Count(a) => commands::count(a)?,
        Command::Dims(a) => commands::dims(a)?,
        Command::Dynamics(c) => commands::dynamics(c)?,
        Command::Sweep(a) => commands::sweep(a)?,
        Command::Repro(a) => repro::run(a)?,
    };
    let config = serde_json::json!({
        "command": &cli.command,
        "model": model,
    });
    output::emit(name, &config, out, cli.format, cli.out.as_ref())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
