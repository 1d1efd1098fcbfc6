use std::process::ExitCode;

use clap::Parser;

use csl_cli::run::{run, Cli};
use csl_cli::CliError;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            println!("{}", CliError::Usage(e.kind().to_string()).to_json());
            return ExitCode::from(2);
        }
    };
    match run(&cli) {
        Ok(outcome) => {
            if outcome.run_dir.is_some() {
                println!("{}", outcome.to_json());
            }
            if outcome.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            println!("{}", e.to_json());
            ExitCode::from(2)
        }
    }
}
