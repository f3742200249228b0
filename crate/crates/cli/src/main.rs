use std::process::ExitCode;

use monolab_cli::{execute, parse_config, CliError};

fn main() -> ExitCode {
    let result = parse_config(std::env::args_os()).and_then(|inv| execute(&inv));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Clap(e)) => e.exit(),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
