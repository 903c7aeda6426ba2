//! `mcons run`: one gradient-descent run with trajectory CSV and metadata
//! JSON artifacts.

use crate::opts::{parse_alpha, parse_method, resolve_seed, CliError, CliResult, RunArgs};
use manifold_consensus::algorithms::{
    estimate_rate, run, RateEstimate, RunConfig, RunError, TerminalReason, Trajectory,
};
use manifold_consensus::io::{atomic_write, trajectory_csv};
use manifold_consensus::mixing::{MixingError, SpectralSummary};
use serde::Serialize;

#[derive(Serialize)]
struct TheoryBounds {
    sigma2_t: f64,
    /// Unit-step contraction certificate `(1 + 2 sigma2^t)/2`.
    unit_step_bound: f64,
    /// Flat-case optimal-step factor `(L_1 - mu_1)/(L_1 + mu_1)`.
    optimal_step_bound: f64,
}

/// Everything a rerun needs, embedded in the artifact: resolved values only,
/// no implicit defaults.
#[derive(Serialize)]
pub struct RunMetadata {
    pub config: RunConfig,
    pub resolved_alpha: f64,
    pub terminal_reason: TerminalReason,
    pub iterations: usize,
    pub iterations_to_tolerance: Option<usize>,
    pub outside_tube_records: usize,
    pub spectral_t: SpectralSummary,
    pub spectral_t1: SpectralSummary,
    theory: TheoryBounds,
    pub rate: Option<RateEstimate>,
    pub stopping_metric: &'static str,
    pub rng_algorithm: &'static str,
    pub weight_rule: &'static str,
}

pub fn metadata_for(traj: &Trajectory) -> RunMetadata {
    let sigma2_t = traj.spectral.sigma2_t();
    let s1 = &traj.spectral_t1;
    RunMetadata {
        config: traj.config,
        resolved_alpha: traj.resolved_alpha,
        terminal_reason: traj.terminal_reason,
        iterations: traj.records.len().saturating_sub(1),
        iterations_to_tolerance: traj.iterations_to_tolerance(),
        outside_tube_records: traj.outside_tube_records,
        spectral_t: traj.spectral,
        spectral_t1: traj.spectral_t1,
        theory: TheoryBounds {
            sigma2_t,
            unit_step_bound: (1.0 + 2.0 * sigma2_t) / 2.0,
            optimal_step_bound: (s1.l_t - s1.mu_t) / (s1.l_t + s1.mu_t),
        },
        rate: estimate_rate(traj, 0.5).ok(),
        stopping_metric: "normalized_error = ||x - xbar|| / N",
        rng_algorithm: "chacha12",
        weight_rule: "metropolis",
    }
}

pub fn map_run_error(e: RunError) -> CliError {
    match e {
        RunError::Mixing(MixingError::InvalidProbability(_))
        | RunError::Mixing(MixingError::TooFewAgents(_))
        | RunError::Mixing(MixingError::InvalidPower) => CliError::config(e.to_string()),
        RunError::NonPositiveStep(_) => CliError::config(e.to_string()),
        other => CliError::numerical(other.to_string()),
    }
}

pub fn execute(args: &RunArgs) -> CliResult<i32> {
    let manifold = args.manifold.build()?;
    let seed = resolve_seed(args.seed)?;
    let graph = args.graph.config(seed)?;
    let mut cfg = RunConfig::new(manifold, graph, parse_method(&args.method)?);
    cfg.alpha = parse_alpha(&args.alpha)?;
    cfg.t = args.t;
    cfg.max_iters = args.max_iters;
    cfg.tol = args.tol;
    cfg.init_seed = args.init_seed.unwrap_or(seed);
    cfg.init_spread = args.spread;
    if args.t == 0 {
        return Err(CliError::config("t must be >= 1"));
    }

    let traj = run(&cfg).map_err(map_run_error)?;
    let meta = metadata_for(&traj);

    let csv_path = args.out.join(format!("{}.csv", args.name));
    let json_path = args.out.join(format!("{}.json", args.name));
    atomic_write(&csv_path, trajectory_csv(&traj).as_bytes())?;
    let meta_json = serde_json::to_string_pretty(&meta)
        .map_err(|e| CliError::numerical(format!("metadata serialization: {e}")))?;
    atomic_write(&json_path, meta_json.as_bytes())?;

    if args.json {
        println!("{meta_json}");
    } else {
        let rate_line = match &meta.rate {
            Some(r) => format!(
                "rho={:.6} max_step_ratio={:.6} r2={:.6}",
                r.rho, r.max_step_ratio, r.r_squared
            ),
            None => "rho=n/a (too few pre-tolerance records)".to_string(),
        };
        println!(
            "{:?} after {} iterations | {} | theory: sigma2^t={:.6} unit-step bound={:.6} | wrote {} and {}",
            meta.terminal_reason,
            meta.iterations,
            rate_line,
            meta.theory.sigma2_t,
            meta.theory.unit_step_bound,
            csv_path.display(),
            json_path.display()
        );
    }

    match traj.terminal_reason {
        TerminalReason::ToleranceMet | TerminalReason::MaxIters => Ok(0),
        TerminalReason::OutsideTube => {
            eprintln!(
                "numerical failure: a projection/retraction degenerated at iteration {} (artifacts were written)",
                meta.iterations
            );
            Ok(3)
        }
    }
}
