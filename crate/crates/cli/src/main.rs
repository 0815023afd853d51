use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    match mvfuse_cli::run(mvfuse_cli::Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mvfuse: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
