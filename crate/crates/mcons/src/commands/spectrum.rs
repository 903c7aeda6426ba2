//! `mcons spectrum`: mixing-matrix spectral summaries and the gossip-power
//! thresholds the local convergence theory asks for.

use crate::opts::{resolve_seed, CliError, CliResult, SpectrumArgs};
use manifold_consensus::io::{atomic_write, matrix_csv};
use manifold_consensus::mixing::{
    build_graph, metropolis_weights, power_threshold, spectral_summary, SpectralSummary,
};
use serde::Serialize;

#[derive(Serialize)]
struct SpectrumReport {
    graph: String,
    n: usize,
    seed: u64,
    sigma2: f64,
    /// Smallest powers that satisfy `sigma2^t <= target`; 1 means a single
    /// round of gossip already does (exact-averaging matrices).
    thresholds: Thresholds,
    summaries: Vec<SpectralSummary>,
}

#[derive(Serialize)]
struct Thresholds {
    beta: f64,
    /// `log_{sigma2}(1 / (4 sqrt(N)))` — unit-step neighborhood condition.
    unit_step: f64,
    /// `log_{sigma2}(1 / (2 sqrt(N)))` — general-step condition.
    general_step: f64,
    /// `log_{sigma2}((2 - beta)/2)` — error-bound / large-power condition.
    error_bound: f64,
}

pub fn execute(args: &SpectrumArgs) -> CliResult<i32> {
    let seed = resolve_seed(args.seed)?;
    let kind = args.graph.kind()?;
    let graph = build_graph(kind, args.graph.n, seed)
        .map_err(|e| CliError::numerical(e.to_string()))?;
    let w = metropolis_weights(&graph).map_err(|e| CliError::numerical(e.to_string()))?;
    if args.t.contains(&0) {
        return Err(CliError::config("t values must be >= 1"));
    }
    if !(args.beta > 0.0 && args.beta < 2.0) {
        return Err(CliError::config("beta must lie in (0, 2)"));
    }
    let mut summaries = Vec::new();
    for &t in &args.t {
        summaries.push(spectral_summary(&w, t).map_err(|e| CliError::numerical(e.to_string()))?);
    }
    let sigma2 = summaries[0].sigma2;
    let sqrt_n = (args.graph.n as f64).sqrt();
    let report = SpectrumReport {
        graph: format!("{kind}"),
        n: args.graph.n,
        seed,
        sigma2,
        thresholds: Thresholds {
            beta: args.beta,
            unit_step: power_threshold(sigma2, 1.0 / (4.0 * sqrt_n)),
            general_step: power_threshold(sigma2, 1.0 / (2.0 * sqrt_n)),
            error_bound: power_threshold(sigma2, (2.0 - args.beta) / 2.0),
        },
        summaries,
    };
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::numerical(format!("serialization: {e}")))?;
    if let Some(dir) = &args.out {
        atomic_write(&dir.join("w.csv"), matrix_csv(w.w()).as_bytes())?;
        atomic_write(&dir.join("spectrum.json"), json.as_bytes())?;
    }
    if args.json {
        println!("{json}");
    } else {
        println!("{} on {} agents: sigma2 = {:.12}", report.graph, report.n, sigma2);
        for s in &report.summaries {
            println!(
                "  t={}: lambda2={:.12} lambda_min={:.12} L_t={:.12} mu_t={:.12} alpha_opt={:.12}",
                s.t, s.lambda2_t, s.lambda_n_t, s.l_t, s.mu_t, s.alpha_opt
            );
        }
        println!(
            "  power thresholds (beta={}): unit-step {:.4}, general-step {:.4}, error-bound {:.4}",
            args.beta,
            report.thresholds.unit_step,
            report.thresholds.general_step,
            report.thresholds.error_bound
        );
    }
    Ok(0)
}
