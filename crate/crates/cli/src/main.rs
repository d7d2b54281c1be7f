use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use nilflow::{execute_partial, Cli, CliError};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => CliError::Usage(String::new()).exit_code(),
            };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match execute_partial(&cli) {
        Ok((out, None)) => {
            println!("{}", out.text);
            ExitCode::SUCCESS
        }
        Ok((out, Some(e))) => {
            println!("{}", out.text);
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
