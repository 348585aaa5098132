//! `mdl`: command-line front end for the skew-product correlation toolkit.

mod angle;
mod check;
mod manifest;
mod opts;
mod svg;
mod sweep;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mdl_core::Error as CoreError;

/// Outcome of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
}

const EXIT_USAGE: u8 = 1;
const EXIT_FAIL: u8 = 2;
const EXIT_BUDGET: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "mdl", version, about = "Möbius disjointness experiments for skew products on the torus")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Build, inspect and verify angles given by continued fractions.
    #[command(subcommand)]
    Angle(angle::AngleCmd),
    /// Exact and numerical certificates.
    #[command(subcommand)]
    Check(check::CheckCmd),
    /// Short-interval correlation sums S(N, M) over a grid of N and θ.
    Sweep(sweep::SweepArgs),
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let budget = err.chain().any(|e| {
        matches!(
            e.downcast_ref::<CoreError>(),
            Some(CoreError::MemoryBudget { .. } | CoreError::GrowthBudget { .. })
        )
    });
    if budget { EXIT_BUDGET } else { EXIT_USAGE }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.cmd {
        Cmd::Angle(c) => angle::run(c),
        Cmd::Check(c) => check::run(c),
        Cmd::Sweep(a) => sweep::run(a),
    };
    match result {
        Ok(Status::Pass) => ExitCode::SUCCESS,
        Ok(Status::Fail) => ExitCode::from(EXIT_FAIL),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
