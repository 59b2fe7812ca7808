//! Command-line front end: thresholds, predictions, refinement sweeps, tables and a self-check suite.
//!
//! [`run_command`] parses an argument vector, writes the report and returns the
//! process exit code: 0 on success, 2 for invalid input, 3 for numerical
//! failures and 4 when the self-check finds a predictor contradicted by the
//! numerics.

mod args;
mod commands;
mod config;
mod report;

use std::io::Write;

use clap::Parser;
use serde_json::json;
use thiserror::Error;

pub use args::{Cli, Command, Format, GridArgs, KernelArg, OutputArgs};
pub use commands::{selfcheck_cases, verify_case, Disagreement, VerifyOutcome};
pub use report::Report;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_DISAGREEMENT: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Numerical(_) | CliError::Io(_) => EXIT_NUMERICAL,
        }
    }
}

/// Runs one invocation. `argv[0]` is the program name.
pub fn run_command<I, S>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let argv: Vec<String> = argv.into_iter().map(Into::into).collect();
    let given: Vec<String> = argv.iter().skip(1).cloned().collect();
    let argv = match config::inject(argv) {
        Ok(a) => a,
        Err(e) => {
            let body = json!({ "error": e.to_string(), "exit_code": e.exit_code(), "argv": given });
            let _ = writeln!(err, "{}", serde_json::to_string_pretty(&body).expect("json"));
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    EXIT_OK
                }
                _ => {
                    let argv: Vec<&String> = argv.iter().skip(1).collect();
                    let body = json!({ "error": e.render().to_string(), "exit_code": EXIT_VALIDATION, "argv": argv });
                    let _ = writeln!(err, "{}", serde_json::to_string_pretty(&body).expect("json"));
                    EXIT_VALIDATION
                }
            };
        }
    };
    let config = serde_json::to_value(&cli.command).expect("arguments serialize");
    let result = commands::dispatch(&cli.command, &config).and_then(|r| {
        let text = r.render(cli.command.output().format, &config)?;
        match &cli.command.output().output {
            Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?,
            None => out.write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string()))?,
        }
        Ok(r.exit_code)
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            let code = e.exit_code();
            let body = json!({ "error": e.to_string(), "exit_code": code, "config": config });
            let _ = writeln!(err, "{}", serde_json::to_string_pretty(&body).expect("json"));
            code
        }
    }
}
