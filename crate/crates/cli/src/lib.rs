//! `encdetect`: extract features from captures, compose datasets, and run
//! the evaluation grid and cross-dataset validation.

mod compose;
mod config;
mod crossdataset;
mod evaluate;
mod extract;
mod output;

use std::ffi::OsString;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or configuration; exit code 2.
    Usage(String),
    /// Anything that failed while running; exit code 1.
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "encdetect",
    version,
    about = "Encrypted malicious traffic detection pipeline"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Capture files to a labeled feature CSV.
    Extract(extract::ExtractArgs),
    /// Sample per-source, per-class targets into one dataset.
    Compose(compose::ComposeArgs),
    /// Cross-validate algorithms over feature sets.
    Eval(evaluate::EvalArgs),
    /// Train on some sources and test on the others.
    Crossdataset(crossdataset::CrossArgs),
}

/// Parses `args` (program name first), runs the command and maps the outcome
/// to an exit code: 0 success, 1 runtime failure, 2 usage error.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .target(env_logger::Target::Stderr)
        .try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let outcome = match cli.command {
        Command::Extract(a) => extract::run(a),
        Command::Compose(a) => compose::run(a),
        Command::Eval(a) => evaluate::run(a),
        Command::Crossdataset(a) => crossdataset::run(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
