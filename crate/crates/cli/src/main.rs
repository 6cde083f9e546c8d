//! `wpsched` command-line driver.
//!
//! Exit codes: 0 success, 1 validation failure, 2 usage, configuration or
//! I/O error, 3 solver non-convergence.

mod args;
mod commands;
mod config;
mod error;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Analyze(a) => commands::analyze(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Validate(a) => commands::validate(a),
        Command::SweepPh(a) => commands::sweep_ph(a),
        Command::Trace(a) => commands::trace(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("wpsched: {e}");
            e.exit_code()
        }
    }
}
