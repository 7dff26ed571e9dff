//! `prophet-dag`: oracles, covers, policies and generators from the shell.

mod args;
mod commands;
mod gen;

use std::process::ExitCode;

use clap::Parser;

use crate::args::Cli;
use crate::commands::{run, CliError};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let json = cli.json;
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if json {
                let body = serde_json::json!({
                    "error": { "category": e.category(), "message": e.to_string() }
                });
                println!("{body}");
            }
            eprintln!("error ({}): {e}", e.category());
            ExitCode::from(exit_code(&e))
        }
    }
}

/// Exit status per error category; clap itself exits with 2 on bad usage.
fn exit_code(e: &CliError) -> u8 {
    match e.category() {
        "io" => 3,
        "schema" => 4,
        "validation" => 5,
        "cap" => 6,
        "cover" => 7,
        "probabilities" => 8,
        "params" => 9,
        "policy" => 10,
        _ => 1,
    }
}
