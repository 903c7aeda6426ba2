//! `mcons validate`: fit the regularity constants and check every inequality
//! at sampled near-consensus configurations.

use crate::opts::{parse_scheme, resolve_seed, CliError, CliResult, ValidateArgs};
use manifold_consensus::io::atomic_write;
use manifold_consensus::verify::{run_regularity_suite, SuiteConfig, VerifyError};

pub fn execute(args: &ValidateArgs) -> CliResult<i32> {
    let manifold = args.manifold.build()?;
    let seed = resolve_seed(args.seed)?;
    let graph = args.graph.config(seed)?;
    if !(args.beta > 0.0 && args.beta < 2.0) {
        return Err(CliError::config("beta must lie in (0, 2)"));
    }
    if !(0.0..=1.0).contains(&args.nu) {
        return Err(CliError::config("nu must lie in [0, 1]"));
    }
    if args.t == 0 {
        return Err(CliError::config("t must be >= 1"));
    }
    let cfg = SuiteConfig {
        manifold,
        scheme: parse_scheme(&args.scheme)?,
        graph,
        t: args.t,
        samples: args.samples,
        epsilon: args.eps,
        seed,
        beta: args.beta,
        nu: args.nu,
        fit_samples: args.fit_samples,
    };
    let report = run_regularity_suite(&cfg).map_err(|e| match e {
        VerifyError::SamplingExhausted { .. } => CliError::numerical(e.to_string()),
        VerifyError::InsufficientScales { .. } => CliError::config(e.to_string()),
        other => CliError::numerical(other.to_string()),
    })?;

    let json = report.to_json();
    atomic_write(&args.out.join("report.json"), json.as_bytes())?;
    if args.json {
        println!("{json}");
    } else {
        print!("{}", report.table());
        if let Some(nb) = &report.neighborhood {
            println!(
                "neighborhoods: delta0={:.4e} delta1={:.4e} delta2={:.4e} alpha_max={:.4}",
                nb.delta0, nb.delta1, nb.delta2, nb.alpha_max
            );
        } else if let Some(note) = &report.neighborhood_note {
            println!("neighborhoods: {note}");
        }
        println!(
            "nu-consistency gap {:.2e}; report written to {}",
            report.rsi_nu_gap,
            args.out.join("report.json").display()
        );
    }
    Ok(if report.total_violations() > 0 { 1 } else { 0 })
}
