use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = anfold::cli::Cli::parse();
    match anfold::cli::run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
