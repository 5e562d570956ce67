use std::process::ExitCode;

use clap::Parser;
use gb_bench::cli::{run, Cli};
use gb_bench::BenchError;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Some(text)) => {
            println!("{text}");
            ExitCode::SUCCESS
        }
        Ok(None) => ExitCode::SUCCESS,
        Err(e @ BenchError::Usage(_)) => {
            eprintln!("gb: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("gb: {e}");
            ExitCode::FAILURE
        }
    }
}
