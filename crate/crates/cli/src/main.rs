use std::process::ExitCode;

use calpha_cli::Cli;
use clap::Parser;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match calpha_cli::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("calpha: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
