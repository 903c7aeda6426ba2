//! `mcons` — experiment harness for decentralized consensus on compact
//! submanifolds.
//!
//! Subcommands:
//! * `run`      — one gradient-descent run, emitting a trajectory CSV and a
//!   JSON metadata sidecar;
//! * `suite`    — a built-in experiment grid (or a user grid file) with a
//!   summary table, runs paired by seed across methods;
//! * `validate` — fit the regularity constants and check every inequality at
//!   sampled near-consensus configurations;
//! * `spectrum` — spectral summary of a mixing matrix plus the gossip-power
//!   thresholds the local theory needs.
//!
//! Exit codes: 0 success (including iteration-capped runs), 1 inequality
//! violations from `validate`, 2 configuration errors, 3 numerical failures.

mod commands;
mod opts;

use clap::Parser;

#[derive(Parser)]
#[command(name = "mcons", version, about)]
enum Cli {
    Run(opts::RunArgs),
    Suite(opts::SuiteArgs),
    Validate(opts::ValidateArgs),
    Spectrum(opts::SpectrumArgs),
}

fn main() {
    let cli = Cli::parse();
    let outcome = match cli {
        Cli::Run(args) => commands::run::execute(&args),
        Cli::Suite(args) => commands::suite::execute(&args),
        Cli::Validate(args) => commands::validate::execute(&args),
        Cli::Spectrum(args) => commands::spectrum::execute(&args),
    };
    match outcome {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(e.exit_code());
        }
    }
}
