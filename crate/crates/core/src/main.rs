use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use confdist::cli::{run, RunConfig};

fn main() -> ExitCode {
    let config = RunConfig::parse();
    match run(&config) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(out.as_bytes()).is_err() {
                return ExitCode::FAILURE;
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("confdist: {e}");
            ExitCode::FAILURE
        }
    }
}
