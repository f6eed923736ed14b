mod args;
mod commands;
mod config;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use commands::Ctx;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config file or input data; exit status 1.
    Config(String),
    /// Failure while running; exit status 2.
    Runtime(String),
}

impl From<optqrm::Error> for CliError {
    fn from(e: optqrm::Error) -> Self {
        use optqrm::Error as E;
        match e {
            E::Domain { .. }
            | E::Config(_)
            | E::Validation { .. }
            | E::Parse { .. }
            | E::Shape { .. } => CliError::Config(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => config::load(path)?,
        None => config::FileConfig::default(),
    };
    let ctx = Ctx::new(&cli, file);
    match &cli.command {
        Command::Simulate(a) => commands::simulate(&ctx, a),
        Command::Price(a) => commands::price(a),
        Command::SolveWindow(a) => commands::solve_window(&ctx, a),
        Command::Backtest(a) => commands::backtest(&ctx, a),
        Command::Sweep(a) => commands::sweep(&ctx, a),
        Command::Study(a) => commands::study(&ctx, a),
    }
}

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
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
