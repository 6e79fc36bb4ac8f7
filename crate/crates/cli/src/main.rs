//! `cpt-well` command-line tool.
//!
//! Exit status 0 on success, 1 on invalid input, 2 when a numerical step
//! fails.

mod args;
mod commands;

use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use cpt_well::Error;

use args::{Cli, Command};

pub(crate) enum Failure {
    Usage(String),
    Numerical(String),
    /// Output was produced but failed its own check.
    Rejected(String, String),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Dimension { .. }
            | Error::DimensionMismatch { .. }
            | Error::NonFiniteCoupling { .. }
            | Error::SingularAlpha { .. }
            | Error::CoefficientCount { .. }
            | Error::InvalidStudy(_) => Failure::Usage(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

fn emit(text: &str, path: Option<&std::path::Path>) -> Result<(), Failure> {
    let io = |e: std::io::Error| Failure::Io(e.to_string());
    match path {
        Some(p) => std::fs::write(p, text).map_err(io),
        None => std::io::stdout().lock().write_all(text.as_bytes()).map_err(io),
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let (result, path) = match &cli.command {
        Command::Spectrum(a) => (commands::spectrum(a), &a.out.output),
        Command::Scan(a) => (commands::scan(a), &a.out.output),
        Command::Pseudometrics(a) => (commands::pseudometrics(a), &a.out.output),
        Command::Metric(a) => (commands::metric(a), &a.out.output),
        Command::Charge(a) => (commands::charge(a), &a.out.output),
        Command::Verify(a) => (commands::verify(a), &a.out.output),
        Command::Continuum(a) => (commands::continuum(a), &a.out.output),
    };
    match result {
        Ok(text) => emit(&text, path.as_deref()),
        Err(Failure::Rejected(text, why)) => {
            emit(&text, path.as_deref())?;
            Err(Failure::Numerical(why))
        }
        Err(e) => Err(e),
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
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(msg) | Failure::Rejected(_, msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
