//! Command-line pipeline and review server.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod files;
pub mod schema;
pub mod server;
pub mod summary;

use std::process::ExitCode;

use clap::Parser;

pub use args::Cli;
pub use commands::run;

/// Parses arguments, runs, reports errors on stderr and maps them to exit codes.
pub fn main_entry() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
