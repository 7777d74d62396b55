mod cli;
mod commands;
mod fail;
mod instance;

use std::process::ExitCode;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::Parser;
use serde::Serialize;

use crate::cli::Cli;
use crate::fail::{Failure, EXIT_USAGE};

/// Self-describing output of one invocation.
#[derive(Debug, Serialize)]
pub struct RunRecord {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub instance: instance::InstanceSpec,
    pub parameters: serde_json::Value,
    pub outputs: serde_json::Value,
    pub wall_time_seconds: f64,
}

const THREADS_ENV: &str = "CONTEST_ENTRY_THREADS";

fn configure_threads(flag: Option<usize>) -> Result<(), Failure> {
    let from_env = match std::env::var(THREADS_ENV) {
        Ok(v) => Some(v.parse::<usize>().map_err(|_| Failure::usage(format!("{THREADS_ENV} must be a count, got {v:?}")))?),
        Err(_) => None,
    };
    if let Some(k) = flag.or(from_env).filter(|&k| k > 0) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| Failure::usage(format!("cannot size the thread pool: {e}")))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE as u8),
            };
        }
    };
    let start = Instant::now();
    let result = configure_threads(cli.command.threads()).and_then(|_| commands::dispatch(cli.command));
    match result {
        Ok(mut outcome) => {
            outcome.record.wall_time_seconds = start.elapsed().as_secs_f64();
            match serde_json::to_string_pretty(&outcome.record) {
                Ok(s) => println!("{s}"),
                Err(e) => {
                    eprintln!("error: cannot serialise the run record: {e}");
                    return ExitCode::from(fail::EXIT_NUMERIC as u8);
                }
            }
            match outcome.failure {
                Some(f) => {
                    eprintln!("error: {}", f.message);
                    ExitCode::from(f.code as u8)
                }
                None => ExitCode::SUCCESS,
            }
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code as u8)
        }
    }
}
