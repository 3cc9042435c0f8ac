//! `dyad` — batch orchestration for the dyadic-agent evolution engine.
//!
//! Subcommands: `evolve`, `ghost-test`, `analyze`, `export`,
//! `extract-playback`. Exit codes: 0 success, 1 usage/config error,
//! 2 runtime failure.

mod commands;
mod config;
mod workspace;

use clap::{Parser, Subcommand};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "dyad", version, about = "Dyadic-agent neuroevolution runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run (or resume) an evolutionary run per condition and seed.
    Evolve(commands::evolve::EvolveArgs),
    /// Re-test an evolved interactive pair against a replayed partner.
    GhostTest(commands::ghost_test::GhostTestArgs),
    /// Compute behavioral and interaction metrics over completed runs.
    Analyze(commands::analyze::AnalyzeArgs),
    /// Export per-step trial data as CSV.
    Export(commands::export::ExportArgs),
    /// Extract a ghost playback archive from a recorded run.
    ExtractPlayback(commands::extract_playback::ExtractPlaybackArgs),
}

/// Marker for configuration and usage failures (exit code 1); everything
/// else is a runtime failure (exit code 2).
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage_error(message: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(UsageError(message.into()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Evolve(args) => commands::evolve::run(args),
        Command::GhostTest(args) => commands::ghost_test::run(args),
        Command::Analyze(args) => commands::analyze::run(args),
        Command::Export(args) => commands::export::run(args),
        Command::ExtractPlayback(args) => commands::extract_playback::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            if err.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
