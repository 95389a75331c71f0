//! `tbechart`: design, evaluate and apply Shewhart charts for Weibull
//! time-between-events data.
//!
//! Exit codes: 0 success or no signal, 1 usage/configuration error,
//! 2 signal detected, 3 numerical failure, 4 unsatisfiable adjustment.

mod cli;
mod commands;
mod error;
mod report;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use cli::{Cli, Command};
use error::{exit, CliError, CliResult};

/// Sets the worker count of the global pool; results do not depend on it.
const THREADS_ENV: &str = "TBECHART_THREADS";

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))
}

fn run(cli: &Cli) -> CliResult<i32> {
    configure_threads()?;
    match &cli.command {
        Command::Design(a) => commands::design(a),
        Command::Eval(a) => commands::eval(a),
        Command::Table1(a) => commands::table1(a),
        Command::Adjust(a) => commands::adjust_cmd(a),
        Command::Monitor(a) => commands::monitor_cmd(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => exit::OK,
                _ => exit::USAGE,
            };
            return ExitCode::from(code as u8);
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("tbechart: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
