//! `lumenloop` command-line front end.
//!
//! Exit codes: 0 success, 1 check failed, 2 usage or validation error,
//! 3 provider failure, 4 iteration budget exhausted.

mod args;
mod commands;
mod resolve;

use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = args::Cli::parse();
    match commands::run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
