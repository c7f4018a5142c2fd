//! `zsar`: fit parameter maps, evaluate zero-shot regimes over many splits,
//! and generate planted synthetic datasets.
//!
//! Exit codes: 0 success, 2 invalid input or configuration, 3 numerical failure.

mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;
use serde_json::json;
use zsar_core::Error;

use args::{Cli, Command};

const EXIT_INPUT: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

fn exit_code(e: &Error) -> u8 {
    if e.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_INPUT
    }
}

fn report(kind: &str, message: &str, code: u8, as_json: bool) {
    if as_json {
        eprintln!(
            "{}",
            json!({ "error": { "kind": kind, "message": message, "exit_code": code } })
        );
    } else {
        eprintln!("error: {message}");
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            if std::env::args().any(|a| a == "--error-json") {
                let msg = e.to_string();
                report("usage", msg.lines().next().unwrap_or("invalid arguments"), EXIT_INPUT, true);
            } else {
                let _ = e.print();
            }
            return ExitCode::from(EXIT_INPUT);
        }
    };
    let result = match &cli.command {
        Command::Fit(a) => commands::fit(a),
        Command::Eval(a) => commands::eval(a),
        Command::SynthData(a) => commands::synth_data(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = exit_code(&e);
            report(e.kind_name(), &e.to_string(), code, cli.error_json);
            ExitCode::from(code)
        }
    }
}
