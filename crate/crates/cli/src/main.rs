//! `wtasep`: build separation dictionaries, denoise recordings and measure
//! the WTA-hash search against the cosine baseline.
//!
//! Exit status is 0 on success, 1 on a runtime failure and 2 on a usage
//! error.

mod args;
mod commands;
mod config;
mod inputs;
mod report;

use std::process::ExitCode;

use anyhow::Result;
use clap::{CommandFactory, FromArgMatches};

use crate::args::{Cli, Command};

/// Bad invocation that clap cannot see, such as an empty input directory.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn parse() -> Result<Cli> {
    let command = Cli::command().mut_subcommands(|s| s.args_override_self(true));
    let argv = config::expand(&command, std::env::args_os().collect())?;
    let matches = command
        .try_get_matches_from(argv)
        .unwrap_or_else(|e| e.exit());
    Ok(Cli::from_arg_matches(&matches).unwrap_or_else(|e| e.exit()))
}

fn run() -> Result<()> {
    let cli = parse()?;
    if cli.require_seed && cli.command.seed().is_none() {
        return Err(usage("--seed is required when --require-seed is set"));
    }
    match cli.command {
        Command::Synth(a) => commands::synth(a),
        Command::BuildDict(a) => commands::build_dict(a),
        Command::Separate(a) => commands::separate(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::GridSearch(a) => commands::grid_search(a),
        Command::HashStats(a) => commands::hash_stats(a),
        Command::Bench(a) => commands::bench(a),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<UsageError>() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
