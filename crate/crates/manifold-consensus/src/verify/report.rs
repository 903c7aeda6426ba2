//! Suite driver assembling constants, checks, and neighborhood data into one
//! machine-readable report.

use super::checks::{
    check_error_bound_equivalence, check_inequality, evaluate_samples, rsi_nu_consistency_gap,
    CheckParams, Inequality, InequalityRecord, ALL_INEQUALITIES,
};
use super::constants::{fit_constants, EstimatedConstants, FitConfig};
use super::neighborhood::{neighborhood_constants, NeighborhoodConstants};
use super::sampling::sample_near_consensus;
use super::Result;
use crate::algorithms::GraphConfig;
use crate::manifolds::{ManifoldSpec, RetractionScheme};
use crate::mixing::{build_graph, metropolis_weights, SpectralSummary};
use serde::Serialize;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SuiteConfig {
    pub manifold: ManifoldSpec,
    pub scheme: RetractionScheme,
    pub graph: GraphConfig,
    pub t: u32,
    pub samples: usize,
    pub epsilon: f64,
    pub seed: u64,
    pub beta: f64,
    pub nu: f64,
    pub fit_samples: usize,
}

impl SuiteConfig {
    pub fn new(manifold: ManifoldSpec, graph: GraphConfig) -> Self {
        SuiteConfig {
            manifold,
            scheme: RetractionScheme::Qr,
            graph,
            t: 1,
            samples: 200,
            epsilon: 0.05,
            seed: 0,
            beta: 1.0,
            nu: 0.5,
            fit_samples: 240,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RegularityReport {
    pub config: SuiteConfig,
    pub spectral: SpectralSummary,
    pub constants: EstimatedConstants,
    pub records: Vec<InequalityRecord>,
    /// Unit-step and general-step neighborhood radii at the sample sup-error,
    /// when the fitted constants leave them non-empty.
    pub neighborhood: Option<NeighborhoodConstants>,
    pub neighborhood_note: Option<String>,
    /// Largest relative gap between the nu-mixed secant bound at `nu = 1` and
    /// the gradient-form bound (must vanish to round-off).
    pub rsi_nu_gap: f64,
}

impl RegularityReport {
    pub fn total_violations(&self) -> usize {
        self.records.iter().map(|r| r.violations).sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Fixed-width human-readable summary, one line per inequality.
    pub fn table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<28} {:>7} {:>7} {:>5} {:>7}  {}\n",
            "inequality", "tested", "held", "viol", "skipped", "worst margin"
        ));
        for r in &self.records {
            let margin = match r.worst_margin {
                Some(m) => format!("{m:.3e}"),
                None => "-".to_string(),
            };
            out.push_str(&format!(
                "{:<28} {:>7} {:>7} {:>5} {:>7}  {}\n",
                r.name, r.samples_tested, r.satisfied, r.violations, r.hypothesis_failed, margin
            ));
        }
        out.push_str(&format!(
            "constants: M0={:.4} M1={:.4} M2={:.4} L_p={:.4} Q={:.4} ({})\n",
            self.constants.m0,
            self.constants.m1,
            self.constants.m2,
            self.constants.l_p,
            self.constants.q,
            self.constants.confidence_note
        ));
        out
    }
}

/// Fit constants, draw the sample set, and run every inequality check plus
/// the error-bound equivalence. The mixed secant inequality is evaluated at
/// the canonical weights 0, 1/2, 1 and additionally at `config.nu` when that
/// differs.
pub fn run_regularity_suite(config: &SuiteConfig) -> Result<RegularityReport> {
    let graph = build_graph(config.graph.kind, config.graph.n, config.graph.seed)?;
    let w = metropolis_weights(&graph)?.with_power(config.t)?;
    let spectral = w.spectral_summary()?;
    let fit = FitConfig {
        samples: config.fit_samples,
        seed: config.seed ^ 0x05EE_DF17,
        ..FitConfig::default()
    };
    let constants = fit_constants(&config.manifold, config.scheme, &w, &fit)?;
    let samples = sample_near_consensus(
        &config.manifold,
        config.graph.n,
        config.epsilon,
        config.samples,
        config.seed,
    )?;
    let evals = evaluate_samples(&samples, &w)?;

    let params = CheckParams {
        beta: config.beta,
        nu: config.nu,
        scheme: config.scheme,
        seed: config.seed ^ 0x000C_4EC4,
    };
    let mut records = Vec::new();
    for ineq in ALL_INEQUALITIES {
        if ineq == Inequality::SecantMixed {
            let mut nus = vec![0.0, 0.5, 1.0];
            if !nus.iter().any(|v| (v - config.nu).abs() < 1e-15) {
                nus.push(config.nu);
            }
            for nu in nus {
                let p = CheckParams { nu, ..params };
                let mut rec = check_inequality(ineq, &evals, &w, &constants, &p)?;
                rec.name = format!("secant_mixed(nu={nu})");
                records.push(rec);
            }
        } else {
            records.push(check_inequality(ineq, &evals, &w, &constants, &params)?);
        }
    }
    records.push(check_error_bound_equivalence(&evals, &w, &constants, &params)?);
    let rsi_nu_gap = rsi_nu_consistency_gap(&evals, &w)?;

    let finf_cap = 2.0 * config.epsilon;
    let (neighborhood, neighborhood_note) = match neighborhood_constants(
        &constants,
        &spectral,
        &config.manifold,
        config.graph.n,
        config.nu,
        finf_cap,
    ) {
        Ok(nb) => (Some(nb), None),
        Err(e) => (None, Some(e.to_string())),
    };

    Ok(RegularityReport {
        config: *config,
        spectral,
        constants,
        records,
        neighborhood,
        neighborhood_note,
        rsi_nu_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixing::GraphKind;

    #[test]
    fn suite_runs_clean_on_a_small_sphere() {
        let cfg = SuiteConfig {
            samples: 60,
            t: 4,
            ..SuiteConfig::new(
                ManifoldSpec::sphere(5),
                GraphConfig {
                    kind: GraphKind::Star,
                    n: 6,
                    seed: 0,
                },
            )
        };
        let report = run_regularity_suite(&cfg).unwrap();
        assert_eq!(report.total_violations(), 0);
        assert!(report.rsi_nu_gap <= 1e-12);
        // canonical nu grid plus the equivalence record
        assert_eq!(report.records.len(), ALL_INEQUALITIES.len() + 2 + 1);
        let json = report.to_json();
        assert!(json.contains("secant_mixed(nu=0.5)"));
        let table = report.table();
        assert!(table.contains("projection_lipschitz"));
    }
}
