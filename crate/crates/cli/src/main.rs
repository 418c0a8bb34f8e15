//! `varcast` command-line interface.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 data error,
//! 4 numerical failure.

mod commands;
mod config;
mod error;
mod output;

use std::process::ExitCode;

use clap::Parser;

use crate::config::{Cli, Command};
use crate::error::CliError;

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Diagnose(a) => commands::cmd_diagnose(a),
        Command::Fit(a) => commands::cmd_fit(a),
        Command::Forecast(a) => commands::cmd_forecast(a),
        Command::Oirf(a) => commands::cmd_oirf(a),
        Command::Compare(a) => commands::cmd_compare(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let Some(hint) = e.hint() {
                eprintln!("hint: {hint}");
            }
            ExitCode::from(e.exit_code())
        }
    }
}
