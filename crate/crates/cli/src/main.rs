mod args;
mod commands;
mod config;
mod error;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command, Format};
use commands::Sink;
use error::{CliError, CliResult};

fn run(cli: Cli) -> CliResult<()> {
    let file = match &cli.config {
        Some(p) => config::read_table(p)?,
        None => Default::default(),
    };
    let file_format = match file.get("format") {
        Some(v) => Some(
            serde_json::from_value::<Format>(v.clone())
                .map_err(|e| CliError::usage(format!("config key `format`: {e}")))?,
        ),
        None => None,
    };
    let sink = |default: Format| Sink {
        path: cli.output.clone(),
        format: cli.format.or(file_format).unwrap_or(default),
    };
    match &cli.command {
        Command::Duration(a) => commands::duration(config::resolve(a, &file)?, &sink(Format::Csv)),
        Command::ProbUp(a) => commands::prob_up(config::resolve(a, &file)?, &sink(Format::Csv)),
        Command::PriceStats(a) => commands::price_stats(config::resolve(a, &file)?, &sink(Format::Json)),
        Command::Simulate(a) => commands::simulate(config::resolve(a, &file)?, &sink(Format::Csv)),
        Command::Estimate(a) => commands::estimate_cmd(config::resolve(a, &file)?, &sink(Format::Json)),
        Command::Vol(a) => commands::vol(config::resolve(a, &file)?, &sink(Format::Json)),
        Command::Xval(a) => commands::xval(config::resolve(a, &file)?, &sink(Format::Json)),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let err = CliError::usage(e.to_string().trim().to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.kind.code() as u8)
        }
    }
}
