use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    match driftcast_cli::run(driftcast_cli::Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
