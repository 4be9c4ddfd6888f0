//! `dcs`: command-line front end for discrete conformal structures.

mod args;
mod commands;
mod failure;
mod input;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.sequential {
        dcs_core::exec::set_parallel(false);
    }
    let result = match &cli.command {
        Command::Validate(a) => commands::validate(a),
        Command::Curvature(a) => commands::curvature(a),
        Command::Flow(a) => commands::flow(a),
        Command::Solve(a) => commands::solve(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
