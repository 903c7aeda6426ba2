//! `mcons suite`: built-in experiment grids (or a user grid file), runs
//! paired by seed across methods, with one trajectory artifact per run and a
//! suite summary.

use super::run::{map_run_error, metadata_for};
use crate::opts::{resolve_seed, CliError, CliResult, SuiteArgs};
use manifold_consensus::algorithms::{
    run, GraphConfig, Method, RunConfig, StepSize, TerminalReason,
};
use manifold_consensus::io::{atomic_write, g17, trajectory_csv};
use manifold_consensus::manifolds::ManifoldSpec;
use manifold_consensus::mixing::GraphKind;
use serde::{Deserialize, Serialize};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

#[derive(Deserialize)]
struct GridEntry {
    name: String,
    config: RunConfig,
}

/// Built-in experiment grids. `figure2` compares the three methods on the
/// three graph families; `figure3`-`figure6` sweep step size and gossip
/// power per (manifold, graph) pair.
fn builtin_grid(name: &str) -> Option<Vec<(String, RunConfig)>> {
    let stiefel = ManifoldSpec::stiefel(200, 2);
    let oblique = ManifoldSpec::oblique(200, 5);
    let graph = |kind| GraphConfig { kind, n: 15, seed: 0 };
    let cell = |m: ManifoldSpec, kind, method, alpha, t: u32, label: String| {
        let mut cfg = RunConfig::new(m, graph(kind), method);
        cfg.alpha = alpha;
        cfg.t = t;
        (label, cfg)
    };
    match name {
        "figure2" => {
            let mut cells = Vec::new();
            for (kind, glabel) in [
                (GraphKind::Random { p: 0.5 }, "random"),
                (GraphKind::Star, "star"),
                (GraphKind::Cycle, "cycle"),
            ] {
                for method in [Method::Pgd, Method::RgdQr, Method::RgdPolar] {
                    cells.push(cell(
                        stiefel,
                        kind,
                        method,
                        StepSize::Unit,
                        1,
                        format!("{glabel}_{method}"),
                    ));
                }
            }
            Some(cells)
        }
        "figure3" | "figure4" | "figure5" | "figure6" => {
            let (m, kind, glabel) = match name {
                "figure3" => (stiefel, GraphKind::Star, "star"),
                "figure4" => (stiefel, GraphKind::Cycle, "cycle"),
                "figure5" => (oblique, GraphKind::Star, "star"),
                _ => (oblique, GraphKind::Cycle, "cycle"),
            };
            let mut cells = Vec::new();
            for method in [Method::Pgd, Method::RgdQr] {
                for (alpha, t, suffix) in [
                    (StepSize::Unit, 1, "alpha1_t1"),
                    (StepSize::TwoOverLPlusMu, 1, "alphaopt_t1"),
                    (StepSize::Unit, 10, "alpha1_t10"),
                ] {
                    cells.push(cell(
                        m,
                        kind,
                        method,
                        alpha,
                        t,
                        format!("{glabel}_{method}_{suffix}"),
                    ));
                }
            }
            Some(cells)
        }
        _ => None,
    }
}

#[derive(Serialize)]
struct SummaryRow {
    name: String,
    terminal: Option<TerminalReason>,
    iterations: Option<usize>,
    iterations_to_tolerance: Option<usize>,
    rho: Option<f64>,
    r_squared: Option<f64>,
    sigma2_t: Option<f64>,
    error: Option<String>,
}

pub fn execute(args: &SuiteArgs) -> CliResult<i32> {
    let base_seed = resolve_seed(args.seed)?;
    let mut cells: Vec<(String, RunConfig)> = match (&args.name, &args.grid) {
        (Some(_), Some(_)) => {
            return Err(CliError::config(
                "give either a built-in suite name or --grid, not both",
            ))
        }
        (Some(name), None) => builtin_grid(name).ok_or_else(|| {
            CliError::config(format!(
                "unknown suite '{name}' (expected figure2..figure6, or use --grid)"
            ))
        })?,
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::config(format!("cannot read grid file: {e}")))?;
            let entries: Vec<GridEntry> = serde_json::from_str(&text)
                .map_err(|e| CliError::config(format!("grid file does not parse: {e}")))?;
            if entries.is_empty() {
                return Err(CliError::config("grid file contains no runs"));
            }
            entries.into_iter().map(|e| (e.name, e.config)).collect()
        }
        (None, None) => {
            return Err(CliError::config(
                "name a built-in suite (figure2..figure6) or pass --grid FILE",
            ))
        }
    };

    // paired repetitions: one seed index drives both the graph and the
    // initialization so methods sharing an index share x0 and W exactly
    let mut tasks: Vec<(String, RunConfig)> = Vec::with_capacity(cells.len() * args.seeds as usize);
    for s in 0..args.seeds.max(1) {
        for (label, cfg) in &mut cells {
            let mut cfg = *cfg;
            cfg.graph.seed = base_seed + s;
            cfg.init_seed = base_seed + s;
            if let Some(cap) = args.max_iters {
                cfg.max_iters = cap;
            }
            tasks.push((format!("{label}_s{}", base_seed + s), cfg));
        }
    }

    let rows: Vec<SummaryRow> = {
        let results: Vec<Mutex<Option<SummaryRow>>> =
            tasks.iter().map(|_| Mutex::new(None)).collect();
        let next = AtomicUsize::new(0);
        let jobs = args.jobs.max(1).min(tasks.len());
        std::thread::scope(|scope| {
            for _ in 0..jobs {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= tasks.len() {
                        break;
                    }
                    let (name, cfg) = &tasks[i];
                    let row = run_one(name, cfg, args);
                    *results[i].lock().unwrap() = Some(row);
                });
            }
        });
        results
            .into_iter()
            .map(|m| m.into_inner().unwrap().expect("worker filled every slot"))
            .collect()
    };

    let summary_json = serde_json::to_string_pretty(&rows)
        .map_err(|e| CliError::numerical(format!("summary serialization: {e}")))?;
    atomic_write(&args.out.join("summary.json"), summary_json.as_bytes())?;
    let mut csv = String::from(
        "name,terminal,iterations,iterations_to_tolerance,rho,r_squared,sigma2_t,error\n",
    );
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.name,
            r.terminal.map(|t| format!("{t:?}")).unwrap_or_default(),
            r.iterations.map(|v| v.to_string()).unwrap_or_default(),
            r.iterations_to_tolerance
                .map(|v| v.to_string())
                .unwrap_or_default(),
            r.rho.map(g17).unwrap_or_default(),
            r.r_squared.map(g17).unwrap_or_default(),
            r.sigma2_t.map(g17).unwrap_or_default(),
            r.error.clone().unwrap_or_default(),
        ));
    }
    atomic_write(&args.out.join("summary.csv"), csv.as_bytes())?;

    if args.json {
        println!("{summary_json}");
    } else {
        println!(
            "{:<34} {:>14} {:>7} {:>9}  rho",
            "run", "terminal", "iters", "to-tol"
        );
        for r in &rows {
            println!(
                "{:<34} {:>14} {:>7} {:>9}  {}",
                r.name,
                r.terminal
                    .map(|t| format!("{t:?}"))
                    .unwrap_or_else(|| "error".into()),
                r.iterations.map(|v| v.to_string()).unwrap_or_default(),
                r.iterations_to_tolerance
                    .map(|v| v.to_string())
                    .unwrap_or_else(|| "-".into()),
                r.rho.map(|v| format!("{v:.4}")).unwrap_or_default(),
            );
        }
    }

    // iteration-capped runs are a legitimate outcome; failed runs are not
    let any_failed = rows
        .iter()
        .any(|r| r.error.is_some() || r.terminal == Some(TerminalReason::OutsideTube));
    Ok(if any_failed { 3 } else { 0 })
}

fn run_one(name: &str, cfg: &RunConfig, args: &SuiteArgs) -> SummaryRow {
    match run(cfg).map_err(map_run_error) {
        Ok(traj) => {
            let meta = metadata_for(&traj);
            let csv = trajectory_csv(&traj);
            let mut error = None;
            if let Err(e) = atomic_write(&args.out.join(format!("{name}.csv")), csv.as_bytes()) {
                error = Some(format!("write failed: {e}"));
            }
            match serde_json::to_string_pretty(&meta) {
                Ok(meta_json) => {
                    if let Err(e) =
                        atomic_write(&args.out.join(format!("{name}.json")), meta_json.as_bytes())
                    {
                        error = Some(format!("write failed: {e}"));
                    }
                }
                Err(e) => error = Some(format!("metadata serialization: {e}")),
            }
            SummaryRow {
                name: name.to_string(),
                terminal: Some(meta.terminal_reason),
                iterations: Some(meta.iterations),
                iterations_to_tolerance: meta.iterations_to_tolerance,
                rho: meta.rate.as_ref().map(|r| r.rho),
                r_squared: meta.rate.as_ref().map(|r| r.r_squared),
                sigma2_t: Some(meta.spectral_t.sigma2_t()),
                error,
            }
        }
        Err(e) => SummaryRow {
            name: name.to_string(),
            terminal: None,
            iterations: None,
            iterations_to_tolerance: None,
            rho: None,
            r_squared: None,
            sigma2_t: None,
            error: Some(e.to_string()),
        },
    }
}
