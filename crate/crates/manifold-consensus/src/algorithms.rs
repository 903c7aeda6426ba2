//! Gradient-descent iterations for the consensus problem, trajectory
//! recording, and empirical rate estimation.
//!
//! Two methods are implemented: Riemannian gradient descent
//! `x_{k+1} = R_{x_k}(-alpha * grad phi(x_k))` with either retraction scheme,
//! and projected gradient descent
//! `x_{k+1} = P(x_k - alpha * nabla phi(x_k))`. A run terminates when the
//! normalized consensus error `||x - xbar|| / N` drops to the tolerance
//! (default `2e-16`) or after `max_iters` steps (default 1000). Metrics are
//! computed before each step, so record `k` describes iterate `k`; the
//! terminal iterate gets a final record.

use crate::manifolds::{AmbientMatrix, ManifoldSpec, RetractionScheme};
use crate::mixing::{self, GraphKind, MixingMatrix, SpectralSummary};
use crate::problem::{self, lenient_metrics, riemannian_gradient, AgentStack, ProblemError};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Mixing(#[from] mixing::MixingError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("step size must be positive, got {0}")]
    NonPositiveStep(f64),
}

#[derive(Debug, Error)]
pub enum RateError {
    #[error("need at least {needed} positive-error records in the tail window, found {found}")]
    InsufficientData { needed: usize, found: usize },
    #[error("tail fraction must lie in (0, 1], got {0}")]
    InvalidTailFraction(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", content = "value", rename_all = "snake_case")]
pub enum StepSize {
    /// `alpha = 1`.
    Unit,
    /// `alpha = 2 / (L_1 + mu_1)`, resolved from the spectrum of `W` itself
    /// (not `W^t`) at run start.
    TwoOverLPlusMu,
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    RgdQr,
    RgdPolar,
    Pgd,
}

impl Method {
    pub fn retraction(&self) -> Option<RetractionScheme> {
        match self {
            Method::RgdQr => Some(RetractionScheme::Qr),
            Method::RgdPolar => Some(RetractionScheme::Polar),
            Method::Pgd => None,
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Method::RgdQr => write!(f, "rgd-qr"),
            Method::RgdPolar => write!(f, "rgd-polar"),
            Method::Pgd => write!(f, "pgd"),
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GraphConfig {
    pub kind: GraphKind,
    pub n: usize,
    pub seed: u64,
}

/// Everything that determines a run. Two runs with equal configs produce
/// bit-identical trajectories.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    pub manifold: ManifoldSpec,
    pub graph: GraphConfig,
    /// Gossip power: the objective couples agents through `W^t`.
    pub t: u32,
    pub alpha: StepSize,
    pub method: Method,
    pub max_iters: usize,
    /// Stopping tolerance on the normalized error `||x - xbar|| / N`.
    pub tol: f64,
    pub init_seed: u64,
    /// `None`: independent Gaussian-projected blocks. `Some(s)`: blocks
    /// retracted from a shared base point along random unit tangents of
    /// length `s`, for runs that must start inside a theoretical
    /// neighborhood.
    pub init_spread: Option<f64>,
}

pub const DEFAULT_MAX_ITERS: usize = 1000;
pub const DEFAULT_TOL: f64 = 2e-16;

impl RunConfig {
    pub fn new(manifold: ManifoldSpec, graph: GraphConfig, method: Method) -> Self {
        RunConfig {
            manifold,
            graph,
            t: 1,
            alpha: StepSize::Unit,
            method,
            max_iters: DEFAULT_MAX_ITERS,
            tol: DEFAULT_TOL,
            init_seed: 0,
            init_spread: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalReason {
    ToleranceMet,
    MaxIters,
    /// A step's projection/retraction degenerated; the iterate left the
    /// region where the update is defined.
    OutsideTube,
}

/// One row of the trajectory. Manifold-relative fields are absent whenever
/// the arithmetic mean fell outside the proximal tube at that iterate.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub objective: f64,
    pub euclid_err: f64,
    pub rgrad_norm: f64,
    pub manifold_err: Option<f64>,
    pub finf_err: Option<f64>,
    pub normalized_err: Option<f64>,
    /// `||xbar_k - xbar_{k-1}||`; absent on the first record and around
    /// outside-tube iterates.
    pub mean_drift: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub records: Vec<IterationRecord>,
    pub terminal_reason: TerminalReason,
    pub config: RunConfig,
    /// Spectral summary at the run's `t`.
    pub spectral: SpectralSummary,
    /// Spectral summary of `W` itself (used to resolve the optimal step).
    pub spectral_t1: SpectralSummary,
    pub resolved_alpha: f64,
    /// Records that carry only Euclidean metrics.
    pub outside_tube_records: usize,
    /// The iterate the run stopped at.
    pub final_stack: AgentStack,
}

impl Trajectory {
    /// Index of the record where the stopping rule fired, i.e. steps taken.
    pub fn iterations_to_tolerance(&self) -> Option<usize> {
        match self.terminal_reason {
            TerminalReason::ToleranceMet => self.records.last().map(|r| r.iter),
            _ => None,
        }
    }
}

/// One Riemannian step: retract each block along its negative Riemannian
/// gradient scaled by `alpha`.
pub fn rgd_step(
    s: &AgentStack,
    w: &MixingMatrix,
    alpha: f64,
    scheme: RetractionScheme,
) -> Result<AgentStack, RunError> {
    if alpha <= 0.0 {
        return Err(RunError::NonPositiveStep(alpha));
    }
    let grad = riemannian_gradient(s, w)?;
    let m = *s.manifold();
    let mut blocks = Vec::with_capacity(s.n());
    for (index, (x, g)) in s.blocks().iter().zip(grad).enumerate() {
        let step = g * (-alpha);
        let moved = m
            .retract(scheme, x, &step)
            .map_err(|source| ProblemError::Block { index, source })?;
        blocks.push(moved);
    }
    Ok(AgentStack::new(m, blocks)?)
}

/// One projected step: project each block of `x - alpha * nabla phi(x)` back
/// onto the manifold. With `alpha = 1` this is exactly the projection of the
/// gossiped stack `W^t x`.
pub fn pgd_step(s: &AgentStack, w: &MixingMatrix, alpha: f64) -> Result<AgentStack, RunError> {
    if alpha <= 0.0 {
        return Err(RunError::NonPositiveStep(alpha));
    }
    let mixed = problem::mixed_blocks(s, w)?;
    let m = *s.manifold();
    let mut blocks = Vec::with_capacity(s.n());
    for (index, (x, mixed_block)) in s.blocks().iter().zip(mixed).enumerate() {
        // x - alpha * (x - W^t x) = (1 - alpha) x + alpha * W^t x; with a
        // unit step the target is the gossiped block itself, bit for bit
        let target = if alpha == 1.0 {
            mixed_block
        } else {
            x * (1.0 - alpha) + mixed_block * alpha
        };
        let moved = m
            .project(&target)
            .map_err(|source| ProblemError::Block { index, source })?;
        blocks.push(moved);
    }
    Ok(AgentStack::new(m, blocks)?)
}

/// Seeded random initialization.
///
/// `spread = f64::INFINITY` draws each block independently (projection of a
/// standard Gaussian matrix). A finite `spread` picks one random base point
/// and retracts every block along an independent random unit tangent of
/// length `spread`, which keeps `||x_0 - xbar_0||_{F,inf}` of order `spread`.
/// `spread = 0` is exact consensus.
pub fn initialize(m: ManifoldSpec, n: usize, spread: f64, init_seed: u64) -> AgentStack {
    assert!(n >= 2, "need at least 2 agents");
    assert!(spread >= 0.0, "spread must be nonnegative");
    let mut rng = ChaCha12Rng::seed_from_u64(init_seed);
    let blocks: Vec<AmbientMatrix> = if spread.is_infinite() {
        (0..n).map(|_| m.random_point(&mut rng)).collect()
    } else {
        let base = m.random_point(&mut rng);
        (0..n)
            .map(|_| {
                if spread == 0.0 {
                    return base.clone();
                }
                let dir = m.random_unit_tangent(&base, &mut rng) * spread;
                m.retract(RetractionScheme::Polar, &base, &dir)
                    .expect("retraction from a feasible base point")
            })
            .collect()
    };
    AgentStack::new(m, blocks).expect("initialization produces feasible blocks")
}

/// Execute a full run. Iterates that fall outside the proximal tube record
/// Euclidean metrics only and the run continues; a degenerate step terminates
/// with [`TerminalReason::OutsideTube`] instead of panicking.
pub fn run(cfg: &RunConfig) -> Result<Trajectory, RunError> {
    let graph = mixing::build_graph(cfg.graph.kind, cfg.graph.n, cfg.graph.seed)?;
    let w1 = mixing::metropolis_weights(&graph)?;
    let w = w1.with_power(cfg.t)?;
    let spectral = w.spectral_summary()?;
    let spectral_t1 = mixing::spectral_summary(&w1, 1)?;
    let alpha = match cfg.alpha {
        StepSize::Unit => 1.0,
        StepSize::TwoOverLPlusMu => spectral_t1.alpha_opt,
        StepSize::Fixed(a) => a,
    };
    if alpha <= 0.0 {
        return Err(RunError::NonPositiveStep(alpha));
    }

    let spread = cfg.init_spread.unwrap_or(f64::INFINITY);
    let mut stack = initialize(cfg.manifold, cfg.graph.n, spread, cfg.init_seed);
    let mut records = Vec::new();
    let mut prev_mean: Option<AmbientMatrix> = None;
    let mut outside_tube_records = 0usize;

    let terminal_reason = loop {
        let iter = records.len();
        let lm = lenient_metrics(&stack, &w)?;
        let (manifold_err, finf_err, normalized_err, mean_drift, mean) = match &lm.manifold {
            Some(part) => {
                let drift = prev_mean.as_ref().map(|p| (&part.mean - p).norm());
                (
                    Some(part.manifold_error),
                    Some(part.finf_error),
                    Some(part.normalized_error),
                    drift,
                    Some(part.mean.clone()),
                )
            }
            None => {
                outside_tube_records += 1;
                (None, None, None, None, None)
            }
        };
        records.push(IterationRecord {
            iter,
            objective: lm.objective,
            euclid_err: lm.euclidean_error,
            rgrad_norm: lm.rgrad_norm,
            manifold_err,
            finf_err,
            normalized_err,
            mean_drift,
        });
        if let Some(ne) = normalized_err {
            if ne <= cfg.tol {
                break TerminalReason::ToleranceMet;
            }
        }
        if iter >= cfg.max_iters {
            break TerminalReason::MaxIters;
        }
        prev_mean = mean;
        let stepped = match cfg.method.retraction() {
            Some(scheme) => rgd_step(&stack, &w, alpha, scheme),
            None => pgd_step(&stack, &w, alpha),
        };
        match stepped {
            Ok(next) => stack = next,
            Err(_) => break TerminalReason::OutsideTube,
        }
    };

    Ok(Trajectory {
        records,
        terminal_reason,
        config: *cfg,
        spectral,
        spectral_t1,
        resolved_alpha: alpha,
        outside_tube_records,
        final_stack: stack,
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct RateEstimate {
    /// Per-iteration contraction factor from the least-squares slope of
    /// `log(manifold_err)` over the tail window.
    pub rho: f64,
    /// Largest single-step ratio inside the window.
    pub max_step_ratio: f64,
    /// Coefficient of determination of the log-linear fit.
    pub r_squared: f64,
    /// Number of records in the window.
    pub points: usize,
}

const MIN_RATE_POINTS: usize = 5;

/// Fit a geometric rate to the final `tail_fraction` of the pre-tolerance
/// records with positive manifold error.
pub fn estimate_rate(traj: &Trajectory, tail_fraction: f64) -> Result<RateEstimate, RateError> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(RateError::InvalidTailFraction(tail_fraction));
    }
    let eligible: Vec<(usize, f64)> = traj
        .records
        .iter()
        .filter_map(|r| match (r.manifold_err, r.normalized_err) {
            (Some(e), Some(ne)) if e > 0.0 && ne > traj.config.tol => Some((r.iter, e)),
            _ => None,
        })
        .collect();
    let window = ((eligible.len() as f64 * tail_fraction).ceil() as usize).max(MIN_RATE_POINTS);
    if eligible.len() < window {
        return Err(RateError::InsufficientData {
            needed: window,
            found: eligible.len(),
        });
    }
    let tail = &eligible[eligible.len() - window..];
    let n = tail.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(k, e) in tail {
        let x = k as f64;
        let y = e.ln();
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
    }
    let denom = n * sxx - sx * sx;
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let ss_tot = syy - sy * sy / n;
    let ss_res: f64 = tail
        .iter()
        .map(|&(k, e)| {
            let diff = e.ln() - (intercept + slope * k as f64);
            diff * diff
        })
        .sum();
    let r_squared = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        1.0
    };
    let mut max_step_ratio: f64 = 0.0;
    for pair in tail.windows(2) {
        let ((k0, e0), (k1, e1)) = (pair[0], pair[1]);
        if k1 == k0 + 1 && e0 > 0.0 {
            max_step_ratio = max_step_ratio.max(e1 / e0);
        }
    }
    Ok(RateEstimate {
        rho: slope.exp(),
        max_step_ratio,
        r_squared,
        points: tail.len(),
    })
}

/// Per-step ratios `metric_{k+1} / metric_k` over consecutive records,
/// skipping undefined or zero denominators.
pub fn step_ratios<F: Fn(&IterationRecord) -> Option<f64>>(
    traj: &Trajectory,
    metric: F,
) -> Vec<f64> {
    let mut out = Vec::new();
    for pair in traj.records.windows(2) {
        if pair[1].iter != pair[0].iter + 1 {
            continue;
        }
        if let (Some(prev), Some(next)) = (metric(&pair[0]), metric(&pair[1])) {
            if prev > 0.0 {
                out.push(next / prev);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixing::{build_graph, metropolis_weights};
    use crate::problem::{metrics, stack_norm};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn mixing_for(kind: GraphKind, n: usize, seed: u64, t: u32) -> MixingMatrix {
        metropolis_weights(&build_graph(kind, n, seed).unwrap())
            .unwrap()
            .with_power(t)
            .unwrap()
    }

    #[test]
    fn consensus_stack_is_a_fixed_point() {
        let m = ManifoldSpec::stiefel(5, 2);
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let z = m.random_point(&mut rng);
        let s = AgentStack::consensus(m, z, 4).unwrap();
        let w = mixing_for(GraphKind::Cycle, 4, 0, 1);
        for scheme in [RetractionScheme::Qr, RetractionScheme::Polar] {
            let next = rgd_step(&s, &w, 1.0, scheme).unwrap();
            for (a, b) in next.blocks().iter().zip(s.blocks()) {
                assert!((a - b).norm() <= 1e-13);
            }
        }
        let next = pgd_step(&s, &w, 1.0).unwrap();
        for (a, b) in next.blocks().iter().zip(s.blocks()) {
            assert!((a - b).norm() <= 1e-13);
        }
    }

    #[test]
    fn euclidean_unit_step_is_gossip() {
        let m = ManifoldSpec::euclidean(4, 2);
        let w = mixing_for(GraphKind::Star, 5, 0, 2);
        let s = initialize(m, 5, f64::INFINITY, 3);
        let next = rgd_step(&s, &w, 1.0, RetractionScheme::Qr).unwrap();
        let mixed = problem::mixed_blocks(&s, &w).unwrap();
        for (a, b) in next.blocks().iter().zip(&mixed) {
            assert!((a - b).norm() <= 1e-14);
        }
        // contraction of the distance to the mean by sigma2^t
        let sigma2t = w.spectral_summary().unwrap().sigma2_t();
        let before = metrics(&s, &w).unwrap().euclidean_error;
        let after = metrics(&next, &w).unwrap().euclidean_error;
        assert!(after <= sigma2t * before + 1e-12);
    }

    #[test]
    fn pgd_unit_step_projects_the_gossiped_stack() {
        let m = ManifoldSpec::oblique(6, 2);
        let w = mixing_for(GraphKind::Random { p: 0.6 }, 5, 7, 1);
        let s = initialize(m, 5, f64::INFINITY, 11);
        let direct = pgd_step(&s, &w, 1.0).unwrap();
        let mixed = problem::mixed_blocks(&s, &w).unwrap();
        for (a, mixed_block) in direct.blocks().iter().zip(&mixed) {
            let b = m.project(mixed_block).unwrap();
            assert_eq!(a, &b, "alpha = 1 projected step must match exactly");
        }
    }

    #[test]
    fn retraction_schemes_agree_to_second_order_in_steps() {
        let m = ManifoldSpec::stiefel(8, 2);
        let w = mixing_for(GraphKind::Star, 6, 0, 1);
        let mut prev = f64::INFINITY;
        for spread in [0.1, 0.01, 0.001] {
            let s = initialize(m, 6, spread, 5);
            let a = rgd_step(&s, &w, 1.0, RetractionScheme::Qr).unwrap();
            let b = rgd_step(&s, &w, 1.0, RetractionScheme::Polar).unwrap();
            let gap: f64 = a
                .blocks()
                .iter()
                .zip(b.blocks())
                .map(|(x, y)| (x - y).norm_squared())
                .sum::<f64>()
                .sqrt();
            let grad = riemannian_gradient(&s, &w).unwrap();
            let gnorm2 = stack_norm(&grad).powi(2);
            assert!(gap <= 10.0 * gnorm2 + 1e-15, "gap {gap} vs grad^2 {gnorm2}");
            assert!(gap < prev);
            prev = gap;
        }
    }

    #[test]
    fn run_from_consensus_stops_immediately() {
        let mut cfg = RunConfig::new(
            ManifoldSpec::sphere(4),
            GraphConfig {
                kind: GraphKind::Cycle,
                n: 4,
                seed: 0,
            },
            Method::RgdQr,
        );
        cfg.init_spread = Some(0.0);
        let traj = run(&cfg).unwrap();
        assert_eq!(traj.terminal_reason, TerminalReason::ToleranceMet);
        assert_eq!(traj.records.len(), 1);
        assert_eq!(traj.iterations_to_tolerance(), Some(0));
    }

    #[test]
    fn euclidean_run_contracts_at_the_spectral_rate() {
        let mut cfg = RunConfig::new(
            ManifoldSpec::euclidean(6, 2),
            GraphConfig {
                kind: GraphKind::Random { p: 0.5 },
                n: 8,
                seed: 3,
            },
            Method::Pgd,
        );
        cfg.t = 1;
        cfg.init_seed = 9;
        // stop well above the gossip rounding floor (~1e-17 per step) so the
        // recorded ratios measure the contraction, not noise
        cfg.tol = 1e-7;
        let traj = run(&cfg).unwrap();
        assert_eq!(traj.terminal_reason, TerminalReason::ToleranceMet);
        let sigma2t = traj.spectral.sigma2_t();
        for ratio in step_ratios(&traj, |r| Some(r.euclid_err)) {
            assert!(ratio <= sigma2t + 1e-10);
        }
    }

    #[test]
    fn initialization_contract() {
        let m = ManifoldSpec::stiefel(6, 2);
        // determinism
        let a = initialize(m, 5, f64::INFINITY, 42);
        let b = initialize(m, 5, f64::INFINITY, 42);
        for (x, y) in a.blocks().iter().zip(b.blocks()) {
            assert_eq!(x, y);
        }
        // zero spread collapses to one point
        let c = initialize(m, 5, 0.0, 7);
        for x in c.blocks() {
            assert_eq!(x, c.block(0));
        }
        // finite spread stays within spread + M0 * spread^2 of the base
        let spread = 0.05;
        let m0 = {
            let mut rng = ChaCha12Rng::seed_from_u64(123);
            let mut worst: f64 = 0.0;
            for _ in 0..200 {
                let x = m.random_point(&mut rng);
                let u = m.random_unit_tangent(&x, &mut rng) * spread;
                let y = m.retract(RetractionScheme::Polar, &x, &u).unwrap();
                worst = worst.max((y - &x - &u).norm() / (spread * spread));
            }
            1.5 * worst
        };
        for seed in 0..20 {
            let s = initialize(m, 6, spread, seed);
            let base = initialize(m, 6, 0.0, seed);
            for x in s.blocks() {
                assert!((x - base.block(0)).norm() <= spread + m0 * spread * spread + 1e-12);
            }
        }
    }

    #[test]
    fn iterates_remain_feasible() {
        let m = ManifoldSpec::stiefel(10, 2);
        let w = mixing_for(GraphKind::Random { p: 0.6 }, 6, 1, 1);
        let mut s = initialize(m, 6, f64::INFINITY, 2);
        for k in 0..30 {
            s = match k % 3 {
                0 => rgd_step(&s, &w, 1.0, RetractionScheme::Qr).unwrap(),
                1 => rgd_step(&s, &w, 1.0, RetractionScheme::Polar).unwrap(),
                _ => pgd_step(&s, &w, 1.0).unwrap(),
            };
            for b in s.blocks() {
                assert!(m.feasibility_error(b) <= m.feasibility_tol());
            }
        }
    }

    #[test]
    fn rate_estimate_recovers_exact_geometric_decay() {
        let cfg = RunConfig::new(
            ManifoldSpec::sphere(3),
            GraphConfig {
                kind: GraphKind::Cycle,
                n: 3,
                seed: 0,
            },
            Method::RgdQr,
        );
        let spectral = mixing_for(GraphKind::Cycle, 3, 0, 1)
            .spectral_summary()
            .unwrap();
        let rho: f64 = 0.37;
        let records: Vec<IterationRecord> = (0..40)
            .map(|k| {
                let e = 0.8 * rho.powi(k as i32);
                IterationRecord {
                    iter: k,
                    objective: e * e,
                    euclid_err: e,
                    rgrad_norm: e,
                    manifold_err: Some(e),
                    finf_err: Some(e),
                    normalized_err: Some(e / 3.0),
                    mean_drift: None,
                }
            })
            .collect();
        let traj = Trajectory {
            records,
            terminal_reason: TerminalReason::MaxIters,
            config: cfg,
            spectral,
            spectral_t1: spectral,
            resolved_alpha: 1.0,
            outside_tube_records: 0,
            final_stack: initialize(ManifoldSpec::sphere(3), 3, 0.0, 0),
        };
        let est = estimate_rate(&traj, 0.5).unwrap();
        assert_relative_eq!(est.rho, rho, epsilon = 1e-8);
        assert_relative_eq!(est.max_step_ratio, rho, epsilon = 1e-8);
        assert!(est.r_squared > 1.0 - 1e-12);

        let short = Trajectory {
            records: traj.records[..4].to_vec(),
            ..traj
        };
        assert!(matches!(
            estimate_rate(&short, 0.5),
            Err(RateError::InsufficientData { .. })
        ));
    }

    #[test]
    fn alpha_resolution_uses_the_base_spectrum() {
        let mut cfg = RunConfig::new(
            ManifoldSpec::euclidean(3, 1),
            GraphConfig {
                kind: GraphKind::Cycle,
                n: 4,
                seed: 0,
            },
            Method::Pgd,
        );
        cfg.alpha = StepSize::TwoOverLPlusMu;
        cfg.t = 3;
        let traj = run(&cfg).unwrap();
        // cycle on 4 agents: L_1 = 4/3, mu_1 = 2/3, so alpha = 1 regardless of t
        assert_relative_eq!(traj.resolved_alpha, 1.0, epsilon = 1e-12);
    }
}
