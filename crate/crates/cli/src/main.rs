//! `tradepost` command-line interface.
//!
//! Exit status: 0 success, 1 other failure, 2 invalid input (unparsable
//! file, unknown agent, economy failing validation), 3 solver did not
//! converge, 4 a reproduction check failed.

mod commands;
mod repro;
mod settings;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use settings::{Flags, ParseError, Settings};

#[derive(Parser)]
#[command(
    name = "tradepost",
    version,
    about = "Equilibria of two-sided trading-post games with altruistic and spiteful agents"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand)]
enum Command {
    /// Check an economy against the model's assumptions.
    Validate,
    /// Follow the perturbation schedule to an equilibrium; writes trace.csv.
    Solve,
    /// First-order conditions and deviation gains at `--profile`.
    Verify,
    /// One agent's payoff curve at `--profile`; writes curve.csv.
    Scan,
    /// Grid oracle, homotopy and first-order sweep combined into a certificate.
    Certify,
    /// Re-run the built-in scenarios and check their expected outcomes.
    Repro {
        /// Scenario name, or `all`.
        #[arg(default_value = "all")]
        scenario: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    Invalid,
    NotConverged,
    Mismatch,
}

impl Status {
    fn code(self) -> u8 {
        match self {
            Status::Success => 0,
            Status::Invalid => 2,
            Status::NotConverged => 3,
            Status::Mismatch => 4,
        }
    }
}

fn run(cli: &Cli) -> anyhow::Result<Status> {
    let settings = Settings::resolve(&cli.flags)?;
    match &cli.command {
        Command::Validate => commands::run_validate(&settings),
        Command::Solve => commands::run_solve(&settings),
        Command::Verify => commands::run_verify(&settings),
        Command::Scan => commands::run_scan(&settings),
        Command::Certify => commands::run_certify(&settings),
        Command::Repro { scenario } => repro::run_repro(&settings, scenario),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(status) => ExitCode::from(status.code()),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ParseError>().is_some() {
                ExitCode::from(Status::Invalid.code())
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
