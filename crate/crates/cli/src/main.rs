mod artifacts;
mod commands;
mod config;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use artifacts::{Failure, Result};
use config::{Cli, RunConfig};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(&cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> Result<String> {
    let cfg = match (&cli.config, &cli.command) {
        (Some(_), Some(_)) => {
            return Err(Failure::Usage(
                "--config replays a saved run; give either it or a subcommand".into(),
            ))
        }
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
            RunConfig::from_json(&text)
                .map_err(|e| Failure::Usage(format!("{} is not a run configuration: {e}", path.display())))?
        }
        (None, Some(command)) => RunConfig {
            common: cli.common.clone(),
            command: command.clone(),
        },
        (None, None) => return Err(Failure::Usage("no subcommand given; see --help".into())),
    };
    commands::execute(&cfg, &cli.data_dir, cli.out_dir.as_deref())
}
