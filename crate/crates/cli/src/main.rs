use std::fmt;
use std::process::ExitCode;

use clap::Parser;

mod args;
mod commands;
mod config;
mod output;

use args::{Cli, Command};

/// Process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    pub const FAILURE: u8 = 1;
    pub const USAGE: u8 = 2;
    pub const NOT_SPLIT: u8 = 3;
    pub const ORACLE: u8 = 4;
}

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: exit::USAGE,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<torus_split::Error> for CliError {
    fn from(e: torus_split::Error) -> Self {
        use torus_split::Error::*;
        let code = match e {
            InvalidArgument(_)
            | EmptyEigenspace { .. }
            | UnsupportedEvaluation(_)
            | ResourceLimit { .. }
            | UnknownFixture { .. } => exit::USAGE,
            CouplingTooLarge { .. } => exit::ORACLE,
            DegenerateBranch { .. } => exit::NOT_SPLIT,
            NotSymmetric { .. } | NoConvergence { .. } => exit::FAILURE,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self {
            code: exit::FAILURE,
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Multiplicity(a) => commands::multiplicity(&a),
        Command::Representations(a) => commands::representations(&a),
        Command::Spectrum(a) => commands::spectrum(&a),
        Command::Split(a) => commands::split(&a),
        Command::Oracle(a) => commands::oracle(&a),
        Command::Reference(a) => commands::reference(&a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
