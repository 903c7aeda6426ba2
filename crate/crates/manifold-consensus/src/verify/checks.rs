//! Sampled evaluation of every inequality the convergence analysis uses.
//!
//! Each check classifies every offered sample as hypothesis-failed (the
//! inequality's stated preconditions could not be machine-verified there),
//! held, or violated. Hypothesis-failed samples are counted, never silently
//! dropped. A violation means the slack `permissive_side - demanding_side`
//! fell below `-1e-10` times the comparison scale: the magnitude of the
//! larger side, floored at `1e-3` times the stacked iterate norm. The floor
//! matters only where both sides vanish (exact consensus), where the sides
//! are pure round-off of order `1e-16 * ||x||` and a relative test would
//! misread noise as violation; at every informative sample scale the floor
//! is negligible against the sides themselves.

use super::constants::EstimatedConstants;
use super::Result;
use crate::manifolds::{AmbientMatrix, ManifoldSpec, RetractionScheme};
use crate::mixing::{MixingMatrix, SpectralSummary};
use crate::problem::{self, AgentStack, ProblemError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::Serialize;
use std::collections::BTreeMap;

const REL_TOL: f64 = 1e-10;

/// Per-sample precomputation shared by all checks.
#[derive(Clone, Debug)]
pub struct SampleEval {
    pub stack: AgentStack,
    pub xhat: AmbientMatrix,
    /// `||x - xhat||`.
    pub ehat: f64,
    /// Distance from the arithmetic mean to the manifold (infinite when the
    /// projection itself degenerates).
    pub dist_xhat: f64,
    pub phi: f64,
    pub egrad: Vec<AmbientMatrix>,
    pub rgrad: Vec<AmbientMatrix>,
    /// Normal components `P_N(nabla phi_i)`.
    pub normal: Vec<AmbientMatrix>,
    pub rgrad_norm2: f64,
    /// Gossiped blocks, row `i` of `W^t x`.
    pub mixed: Vec<AmbientMatrix>,
    /// Present when the arithmetic mean lies inside the proximal tube.
    pub tube: Option<TubeEval>,
    /// `||x||` over the stack, the reference magnitude for round-off.
    pub stack_scale: f64,
}

#[derive(Clone, Debug)]
pub struct TubeEval {
    pub xbar: AmbientMatrix,
    /// `||x - xbar||`.
    pub e: f64,
    /// `max_i ||x_i - xbar||`.
    pub finf: f64,
    /// `<x - xbar, grad phi(x)>`.
    pub inner: f64,
    /// Blockwise projections of the gossiped stack, when all succeed.
    pub proj_mixed: Option<Vec<AmbientMatrix>>,
    /// `max_i dist(sum_j (W^t)_ij x_j, M)`.
    pub dist_mixed_max: f64,
    /// `||x - P(W^t x)||` (NaN when a projection degenerated).
    pub residual: f64,
}

impl SampleEval {
    pub fn new(stack: AgentStack, w: &MixingMatrix) -> std::result::Result<Self, ProblemError> {
        let m = *stack.manifold();
        let n = stack.n();
        let phi = problem::objective(&stack, w)?;
        let mixed = problem::mixed_blocks(&stack, w)?;
        let egrad: Vec<AmbientMatrix> = stack
            .blocks()
            .iter()
            .zip(&mixed)
            .map(|(x, mx)| x - mx)
            .collect();
        let rgrad: Vec<AmbientMatrix> = stack
            .blocks()
            .iter()
            .zip(&egrad)
            .map(|(x, g)| m.tangent_project_unchecked(x, g))
            .collect();
        let normal: Vec<AmbientMatrix> = egrad
            .iter()
            .zip(&rgrad)
            .map(|(g, t)| g - t)
            .collect();
        let rgrad_norm2 = rgrad.iter().map(|g| g.norm_squared()).sum();
        let xhat = problem::euclidean_mean(&stack);
        let ehat = problem::stack_norm(&problem::diffs_from(stack.blocks(), &xhat));
        let stack_scale = problem::stack_norm(stack.blocks());
        let (dist_xhat, tube) = match m.project(&xhat) {
            Err(_) => (f64::INFINITY, None),
            Ok(p) => {
                let dist = (&xhat - &p).norm();
                if dist >= m.proximal_radius() {
                    (dist, None)
                } else {
                    let diffs = problem::diffs_from(stack.blocks(), &p);
                    let e = problem::stack_norm(&diffs);
                    let finf = problem::stack_finf(&diffs);
                    let inner = diffs.iter().zip(&rgrad).map(|(d, g)| d.dot(g)).sum();
                    let mut proj_mixed = Vec::with_capacity(n);
                    let mut dist_mixed_max: f64 = 0.0;
                    let mut residual2 = 0.0;
                    let mut all_ok = true;
                    for (x, mx) in stack.blocks().iter().zip(&mixed) {
                        match m.project(mx) {
                            Ok(pm) => {
                                dist_mixed_max = dist_mixed_max.max((mx - &pm).norm());
                                residual2 += (x - &pm).norm_squared();
                                proj_mixed.push(pm);
                            }
                            Err(_) => {
                                all_ok = false;
                                break;
                            }
                        }
                    }
                    let tube = TubeEval {
                        xbar: p,
                        e,
                        finf,
                        inner,
                        proj_mixed: if all_ok { Some(proj_mixed) } else { None },
                        dist_mixed_max: if all_ok { dist_mixed_max } else { f64::INFINITY },
                        residual: if all_ok { residual2.sqrt() } else { f64::NAN },
                    };
                    (dist, Some(tube))
                }
            }
        };
        Ok(SampleEval {
            stack,
            xhat,
            ehat,
            dist_xhat,
            phi,
            egrad,
            rgrad,
            normal,
            rgrad_norm2,
            mixed,
            tube,
            stack_scale,
        })
    }
}

/// Precompute evaluation contexts for a sample set.
pub fn evaluate_samples(
    samples: &[AgentStack],
    w: &MixingMatrix,
) -> std::result::Result<Vec<SampleEval>, ProblemError> {
    samples
        .iter()
        .map(|s| SampleEval::new(s.clone(), w))
        .collect()
}

/// The inequalities under test, named by what they assert.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Inequality {
    /// Projection is `2/(2-beta)`-Lipschitz on the `beta*gamma` tube.
    ProjectionLipschitz,
    /// `<v, y-x> <= ||v||/(4 gamma) ||y-x||^2` for normals `v` at `x`.
    NormalInequality,
    /// `||P(x+u) - R_x(P_T(u))|| <= M1 ||u||^2`.
    RetractionProjectionGap,
    /// `||sum_i grad_i|| <= 2 sqrt(N) L_p finf * e`.
    GradientSumBound,
    /// `||xhat - xbar|| <= M2 e^2 / N`.
    MeanGapBound,
    /// `e^2/4 <= ||x - xhat||^2 <= e^2` when `e^2 <= N/(4 M2^2)`.
    ConsensusSandwich,
    /// `phi >= mu_t/2 ||x - xhat||^2`.
    QuadraticGrowthMean,
    /// `phi >= mu_t/4 e^2` in the small-error regime.
    QuadraticGrowthManifold,
    /// `<x - xbar, grad> >= (1 - finf^2/gamma) mu_t/4 e^2`.
    SecantDistance,
    /// `||grad||^2 <= 2 L_t phi`.
    GradientObjectiveBound,
    /// `||P_N(nabla phi_i)|| <= sqrt(1/gamma) finf^{3/2}`.
    NormalComponentBound,
    /// `<x - xbar, grad> >= Phi/(2 L_t) ||grad||^2`.
    SecantGradient,
    /// The nu-mixture of the gradient and distance secant lower bounds.
    SecantMixed,
    /// `||grad|| >= (c_hat/2) e` near consensus (error bound, gradient form).
    GradientErrorBound,
    /// `||x - P(W^t x)|| >= c_hat e` (error bound, fixed-point form).
    FixedPointErrorBound,
    /// `<x - xbar, grad> >= c_r e^2 >= (c_r/2) ||grad||^2` for large `t`.
    SecantFromLipschitz,
}

pub const ALL_INEQUALITIES: [Inequality; 16] = [
    Inequality::ProjectionLipschitz,
    Inequality::NormalInequality,
    Inequality::RetractionProjectionGap,
    Inequality::GradientSumBound,
    Inequality::MeanGapBound,
    Inequality::ConsensusSandwich,
    Inequality::QuadraticGrowthMean,
    Inequality::QuadraticGrowthManifold,
    Inequality::SecantDistance,
    Inequality::GradientObjectiveBound,
    Inequality::NormalComponentBound,
    Inequality::SecantGradient,
    Inequality::SecantMixed,
    Inequality::GradientErrorBound,
    Inequality::FixedPointErrorBound,
    Inequality::SecantFromLipschitz,
];

impl Inequality {
    pub fn name(&self) -> &'static str {
        match self {
            Inequality::ProjectionLipschitz => "projection_lipschitz",
            Inequality::NormalInequality => "normal_inequality",
            Inequality::RetractionProjectionGap => "retraction_projection_gap",
            Inequality::GradientSumBound => "gradient_sum_bound",
            Inequality::MeanGapBound => "mean_gap_bound",
            Inequality::ConsensusSandwich => "consensus_sandwich",
            Inequality::QuadraticGrowthMean => "quadratic_growth_mean",
            Inequality::QuadraticGrowthManifold => "quadratic_growth_manifold",
            Inequality::SecantDistance => "secant_distance",
            Inequality::GradientObjectiveBound => "gradient_objective_bound",
            Inequality::NormalComponentBound => "normal_component_bound",
            Inequality::SecantGradient => "secant_gradient",
            Inequality::SecantMixed => "secant_mixed",
            Inequality::GradientErrorBound => "gradient_error_bound",
            Inequality::FixedPointErrorBound => "fixed_point_error_bound",
            Inequality::SecantFromLipschitz => "secant_from_lipschitz",
        }
    }

    pub fn description(&self) -> &'static str {
        match self {
            Inequality::ProjectionLipschitz => {
                "projection is 2/(2-beta)-Lipschitz between points within beta*gamma of the manifold"
            }
            Inequality::NormalInequality => {
                "<v, y-x> <= ||v||/(4*gamma) * ||y-x||^2 for on-manifold x, y and normal v at x"
            }
            Inequality::RetractionProjectionGap => {
                "projecting x+u and retracting the tangent part of u agree to second order: gap <= M1*||u||^2"
            }
            Inequality::GradientSumBound => {
                "||sum_i grad_i|| <= 2*sqrt(N)*L_p*||x-xbar||_{F,inf}*||x-xbar||"
            }
            Inequality::MeanGapBound => {
                "||xhat - xbar|| <= M2*||x-xbar||^2/N: the two means agree to second order"
            }
            Inequality::ConsensusSandwich => {
                "||x-xbar||^2/4 <= ||x-xhat||^2 <= ||x-xbar||^2 when ||x-xbar||^2 <= N/(4*M2^2)"
            }
            Inequality::QuadraticGrowthMean => "phi(x) >= mu_t/2 * ||x-xhat||^2",
            Inequality::QuadraticGrowthManifold => {
                "phi(x) >= mu_t/4 * ||x-xbar||^2 when ||x-xbar||^2 <= N/(4*M2^2)"
            }
            Inequality::SecantDistance => {
                "<x-xbar, grad phi> >= (1 - finf^2/gamma)*mu_t/4*||x-xbar||^2"
            }
            Inequality::GradientObjectiveBound => "||grad phi||^2 <= 2*L_t*phi",
            Inequality::NormalComponentBound => {
                "||P_N(nabla phi_i)|| <= sqrt(1/gamma)*finf^{3/2} per agent"
            }
            Inequality::SecantGradient => {
                "<x-xbar, grad phi> >= Phi/(2*L_t)*||grad phi||^2 with Phi = 2*(1 - finf^2/(2*gamma))"
            }
            Inequality::SecantMixed => {
                "<x-xbar, grad phi> >= nu*Phi/(2*L_t)*||grad||^2 + (1-nu)*gamma_R*||x-xbar||^2"
            }
            Inequality::GradientErrorBound => {
                "||grad phi|| >= (c_hat/2)*||x-xbar|| for ||x-xbar|| <= min(beta*gamma, c_hat/(2*Q))"
            }
            Inequality::FixedPointErrorBound => {
                "||x - P(W^t x)|| >= c_hat*||x-xbar|| with c_hat = 1 - 2*sigma2^t/(2-beta)"
            }
            Inequality::SecantFromLipschitz => {
                "<x-xbar, grad phi> >= c_r*||x-xbar||^2 >= (c_r/2)*||grad||^2 with c_r = (4-(2-beta)^2*sigma2^{2t})/16"
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CheckParams {
    /// Tube fraction: inequalities involving the projection Lipschitz factor
    /// are checked on the `beta * gamma` tube.
    pub beta: f64,
    /// Mixing weight of the combined secant inequality.
    pub nu: f64,
    /// Retraction scheme the fitted `M0`/`M1` refer to.
    pub scheme: RetractionScheme,
    /// Seed for the auxiliary point/direction draws of the pointwise checks.
    pub seed: u64,
}

impl Default for CheckParams {
    fn default() -> Self {
        CheckParams {
            beta: 1.0,
            nu: 0.5,
            scheme: RetractionScheme::Qr,
            seed: 0,
        }
    }
}

/// Aggregate result of one inequality over a sample set.
#[derive(Clone, Debug, Serialize)]
pub struct InequalityRecord {
    pub name: String,
    pub description: String,
    /// Sample configurations offered to the check.
    pub samples_tested: usize,
    /// Hypothesis-satisfied samples where the inequality held.
    pub satisfied: usize,
    pub violations: usize,
    pub hypothesis_failed: usize,
    /// Smallest slack (permissive minus demanding side) among evaluated
    /// samples; negative only on violations.
    pub worst_margin: Option<f64>,
    pub params: BTreeMap<String, f64>,
}

impl InequalityRecord {
    fn new(ineq: Inequality) -> Self {
        InequalityRecord {
            name: ineq.name().to_string(),
            description: ineq.description().to_string(),
            samples_tested: 0,
            satisfied: 0,
            violations: 0,
            hypothesis_failed: 0,
            worst_margin: None,
            params: BTreeMap::new(),
        }
    }

    fn push(&mut self, outcome: Option<(f64, f64)>) {
        self.samples_tested += 1;
        match outcome {
            None => self.hypothesis_failed += 1,
            Some((slack, scale)) => {
                if slack < -REL_TOL * scale.abs() {
                    self.violations += 1;
                } else {
                    self.satisfied += 1;
                }
                self.worst_margin = Some(match self.worst_margin {
                    Some(w) => w.min(slack),
                    None => slack,
                });
            }
        }
    }
}

/// Merge a two-part inequality chain into one outcome: the slack is the worse
/// of the two, each judged at its own scale.
fn chain(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    let a_bad = a.0 < -REL_TOL * a.1.abs();
    let b_bad = b.0 < -REL_TOL * b.1.abs();
    match (a_bad, b_bad) {
        (true, _) => a,
        (false, true) => b,
        (false, false) => {
            if a.0 <= b.0 {
                a
            } else {
                b
            }
        }
    }
}

/// Comparison scale for the violation test: larger side, floored at the
/// round-off magnitude of the sample.
fn cmp_scale(ev: &SampleEval, lhs: f64, rhs: f64) -> f64 {
    lhs.abs().max(rhs.abs()).max(1e-3 * ev.stack_scale)
}

fn check_rng(seed: u64, tag: u64, idx: usize) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(
        seed ^ tag.wrapping_mul(0xA076_1D64_78BD_642F)
            ^ (idx as u64 + 1).wrapping_mul(0xE703_7ED1_A0B4_28DB),
    )
}

struct Ctx<'a> {
    evals: &'a [SampleEval],
    spectral: SpectralSummary,
    m: ManifoldSpec,
    gamma: f64,
    n: usize,
    constants: &'a EstimatedConstants,
    params: CheckParams,
}

/// Evaluate one inequality over the sample set.
pub fn check_inequality(
    ineq: Inequality,
    evals: &[SampleEval],
    w: &MixingMatrix,
    constants: &EstimatedConstants,
    params: &CheckParams,
) -> Result<InequalityRecord> {
    let mut record = InequalityRecord::new(ineq);
    if evals.is_empty() {
        return Ok(record);
    }
    let spectral = w.spectral_summary()?;
    let m = *evals[0].stack.manifold();
    let ctx = Ctx {
        evals,
        spectral,
        m,
        gamma: m.gamma(),
        n: w.n(),
        constants,
        params: *params,
    };
    record.params.insert("beta".into(), params.beta);
    record.params.insert("t".into(), spectral.t as f64);
    record.params.insert("gamma".into(), ctx.gamma);
    record.params.insert("sigma2_t".into(), spectral.sigma2_t());
    record.params.insert("mu_t".into(), spectral.mu_t);
    record.params.insert("l_t".into(), spectral.l_t);
    match ineq {
        Inequality::ProjectionLipschitz => projection_lipschitz(&ctx, &mut record),
        Inequality::NormalInequality => normal_inequality(&ctx, &mut record),
        Inequality::RetractionProjectionGap => retraction_projection_gap(&ctx, &mut record),
        Inequality::GradientSumBound => gradient_sum_bound(&ctx, &mut record),
        Inequality::MeanGapBound => mean_gap_bound(&ctx, &mut record),
        Inequality::ConsensusSandwich => consensus_sandwich(&ctx, &mut record),
        Inequality::QuadraticGrowthMean => quadratic_growth_mean(&ctx, &mut record),
        Inequality::QuadraticGrowthManifold => quadratic_growth_manifold(&ctx, &mut record),
        Inequality::SecantDistance => secant_distance(&ctx, &mut record),
        Inequality::GradientObjectiveBound => gradient_objective_bound(&ctx, &mut record),
        Inequality::NormalComponentBound => normal_component_bound(&ctx, &mut record),
        Inequality::SecantGradient => secant_gradient(&ctx, &mut record),
        Inequality::SecantMixed => secant_mixed(&ctx, &mut record),
        Inequality::GradientErrorBound => gradient_error_bound(&ctx, &mut record),
        Inequality::FixedPointErrorBound => fixed_point_error_bound(&ctx, &mut record),
        Inequality::SecantFromLipschitz => secant_from_lipschitz(&ctx, &mut record),
    }
    Ok(record)
}

fn projection_lipschitz(ctx: &Ctx, record: &mut InequalityRecord) {
    let beta = ctx.params.beta;
    let radius = beta * ctx.gamma;
    let cap = (0.99 * radius).min(1.0);
    let factor = 2.0 / (2.0 - beta);
    for (idx, ev) in ctx.evals.iter().enumerate() {
        let mut rng = check_rng(ctx.params.seed, 0x50, idx);
        let n = ev.stack.n();
        let i = rng.random_range(0..n);
        let j = (i + 1 + rng.random_range(0..n - 1)) % n;
        let perturb = |rng: &mut ChaCha12Rng, base: &AmbientMatrix| {
            let g = ctx.m.random_ambient(rng);
            base + &g * (cap * rng.random::<f64>() / g.norm())
        };
        let y = perturb(&mut rng, ev.stack.block(i));
        let z = perturb(&mut rng, ev.stack.block(j));
        // tube membership verified directly, not assumed from construction
        let outcome = match (ctx.m.project(&y), ctx.m.project(&z)) {
            (Ok(py), Ok(pz))
                if (&y - &py).norm() <= radius && (&z - &pz).norm() <= radius =>
            {
                let lhs = (py - pz).norm();
                let rhs = factor * (&y - &z).norm();
                Some((rhs - lhs, cmp_scale(ev, lhs, rhs)))
            }
            _ => None,
        };
        record.push(outcome);
    }
}

fn normal_inequality(ctx: &Ctx, record: &mut InequalityRecord) {
    for (idx, ev) in ctx.evals.iter().enumerate() {
        let mut rng = check_rng(ctx.params.seed, 0x2e, idx);
        let n = ev.stack.n();
        let i = rng.random_range(0..n);
        let x = ev.stack.block(i);
        // alternate the second point between an independent far point and a
        // nearby one reached by retraction; separations below ~1e-2 are not
        // resolvable against the quadratic right side in f64 and would only
        // re-measure round-off
        let y = if idx % 2 == 0 {
            ctx.m.random_point(&mut rng)
        } else {
            let sep = 10f64.powf(-2.0 * rng.random::<f64>());
            let dir = ctx.m.random_unit_tangent(x, &mut rng) * sep;
            match ctx.m.retract(RetractionScheme::Polar, x, &dir) {
                Ok(p) => p,
                Err(_) => {
                    record.push(None);
                    continue;
                }
            }
        };
        let g = ctx.m.random_ambient(&mut rng);
        let v = &g - ctx.m.tangent_project_unchecked(x, &g);
        let lhs = v.dot(&(&y - x));
        let rhs = if ctx.gamma.is_infinite() {
            0.0
        } else {
            v.norm() / (4.0 * ctx.gamma) * (&y - x).norm_squared()
        };
        record.push(Some((rhs - lhs, cmp_scale(ev, lhs, rhs))));
    }
}

fn retraction_projection_gap(ctx: &Ctx, record: &mut InequalityRecord) {
    let m1 = ctx.constants.m1;
    // synthetic directions sweep the whole tube, matching the fit range
    let cap = (0.95 * ctx.m.proximal_radius()).min(2.0);
    for (idx, ev) in ctx.evals.iter().enumerate() {
        let mut rng = check_rng(ctx.params.seed, 0x31, idx);
        let n = ev.stack.n();
        let i = rng.random_range(0..n);
        let x = ev.stack.block(i);
        // one synthetic direction across the scale ladder, plus the natural
        // one the iteration actually produces (the negative Euclidean gradient)
        let g = ctx.m.random_ambient(&mut rng);
        let synthetic = &g * (cap * 10f64.powf(-3.0 * rng.random::<f64>()) / g.norm());
        let natural = -&ev.egrad[i];
        for u in [synthetic, natural] {
            let unorm = u.norm();
            if unorm == 0.0 {
                record.push(Some((0.0, 0.0)));
                continue;
            }
            if unorm >= 0.99 * ctx.m.proximal_radius() {
                record.push(None);
                continue;
            }
            let tangent = ctx.m.tangent_project_unchecked(x, &u);
            let outcome = match (
                ctx.m.project(&(x + &u)),
                ctx.m.retract(ctx.params.scheme, x, &tangent),
            ) {
                (Ok(p), Ok(r)) => {
                    let lhs = (p - r).norm();
                    let rhs = m1 * unorm * unorm;
                    Some((rhs - lhs, cmp_scale(ev, lhs, rhs)))
                }
                _ => None,
            };
            record.push(outcome);
        }
    }
}

fn gradient_sum_bound(ctx: &Ctx, record: &mut InequalityRecord) {
    record.params.insert("l_p".into(), ctx.constants.l_p);
    for ev in ctx.evals {
        let outcome = ev.tube.as_ref().map(|tube| {
            let (d, r) = ctx.m.dims();
            let mut sum = AmbientMatrix::zeros(d, r);
            for g in &ev.rgrad {
                sum += g;
            }
            let lhs = sum.norm();
            let rhs = 2.0 * (ctx.n as f64).sqrt() * ctx.constants.l_p * tube.finf * tube.e;
            (rhs - lhs, cmp_scale(ev, lhs, rhs))
        });
        record.push(outcome);
    }
}

fn mean_gap_bound(ctx: &Ctx, record: &mut InequalityRecord) {
    record.params.insert("m2".into(), ctx.constants.m2);
    for ev in ctx.evals {
        let outcome = ev.tube.as_ref().map(|tube| {
            let lhs = (&ev.xhat - &tube.xbar).norm();
            let rhs = ctx.constants.m2 * tube.e * tube.e / ctx.n as f64;
            (rhs - lhs, cmp_scale(ev, lhs, rhs))
        });
        record.push(outcome);
    }
}

/// Small-error hypothesis shared by the sandwich and the secant bounds.
fn small_error_ok(ctx: &Ctx, tube: &TubeEval) -> bool {
    tube.e * tube.e <= ctx.n as f64 / (4.0 * ctx.constants.m2 * ctx.constants.m2)
}

fn consensus_sandwich(ctx: &Ctx, record: &mut InequalityRecord) {
    record.params.insert("m2".into(), ctx.constants.m2);
    for ev in ctx.evals {
        let outcome = match &ev.tube {
            Some(tube) if small_error_ok(ctx, tube) => {
                let e2 = tube.e * tube.e;
                let h2 = ev.ehat * ev.ehat;
                let lower = (h2 - 0.25 * e2, cmp_scale(ev, h2, 0.25 * e2));
                let upper = (e2 - h2, cmp_scale(ev, e2, h2));
                Some(chain(lower, upper))
            }
            _ => None,
        };
        record.push(outcome);
    }
}

fn quadratic_growth_mean(ctx: &Ctx, record: &mut InequalityRecord) {
    for ev in ctx.evals {
        let bound = 0.5 * ctx.spectral.mu_t * ev.ehat * ev.ehat;
        record.push(Some((ev.phi - bound, cmp_scale(ev, ev.phi, bound))));
    }
}

fn quadratic_growth_manifold(ctx: &Ctx, record: &mut InequalityRecord) {
    record.params.insert("m2".into(), ctx.constants.m2);
    for ev in ctx.evals {
        let outcome = match &ev.tube {
            Some(tube) if small_error_ok(ctx, tube) => {
                let bound = 0.25 * ctx.spectral.mu_t * tube.e * tube.e;
                Some((ev.phi - bound, cmp_scale(ev, ev.phi, bound)))
            }
            _ => None,
        };
        record.push(outcome);
    }
}

/// Hypotheses of the secant inequalities: inside the tube, blockwise error
/// square below `gamma`, stacked error in the small regime.
fn secant_hypotheses_ok(ctx: &Ctx, tube: &TubeEval) -> bool {
    tube.finf * tube.finf <= ctx.gamma && small_error_ok(ctx, tube)
}

fn secant_distance(ctx: &Ctx, record: &mut InequalityRecord) {
    for ev in ctx.evals {
        let outcome = match &ev.tube {
            Some(tube) if secant_hypotheses_ok(ctx, tube) => {
                let tube_factor = if ctx.gamma.is_infinite() {
                    1.0
                } else {
                    1.0 - tube.finf * tube.finf / ctx.gamma
                };
                let rhs = tube_factor * 0.25 * ctx.spectral.mu_t * tube.e * tube.e;
                Some((tube.inner - rhs, cmp_scale(ev, tube.inner, rhs)))
            }
            _ => None,
        };
        record.push(outcome);
    }
}

fn gradient_objective_bound(ctx: &Ctx, record: &mut InequalityRecord) {
    for ev in ctx.evals {
        let rhs = 2.0 * ctx.spectral.l_t * ev.phi;
        record.push(Some((rhs - ev.rgrad_norm2, cmp_scale(ev, ev.rgrad_norm2, rhs))));
    }
}

fn normal_component_bound(ctx: &Ctx, record: &mut InequalityRecord) {
    for ev in ctx.evals {
        let outcome = ev.tube.as_ref().map(|tube| {
            let rhs = if ctx.gamma.is_infinite() {
                0.0
            } else {
                (1.0 / ctx.gamma).sqrt() * tube.finf.powf(1.5)
            };
            let worst = ev.normal.iter().map(|v| v.norm()).fold(0.0, f64::max);
            (rhs - worst, cmp_scale(ev, worst, rhs))
        });
        record.push(outcome);
    }
}

fn phi_factor(gamma: f64, finf: f64) -> f64 {
    if gamma.is_infinite() {
        2.0
    } else {
        2.0 * (1.0 - finf * finf / (2.0 * gamma))
    }
}

fn gamma_r(gamma: f64, finf: f64, mu_t: f64) -> f64 {
    let tube_factor = if gamma.is_infinite() {
        1.0
    } else {
        1.0 - finf * finf / gamma
    };
    tube_factor * mu_t / 4.0
}

/// Right side of the gradient-form secant inequality.
pub fn rsi_gradient_rhs(gamma: f64, finf: f64, l_t: f64, grad_norm2: f64) -> f64 {
    phi_factor(gamma, finf) / (2.0 * l_t) * grad_norm2
}

/// Right side of the nu-mixed secant inequality.
pub fn rsi_mixed_rhs(
    nu: f64,
    gamma: f64,
    finf: f64,
    mu_t: f64,
    l_t: f64,
    grad_norm2: f64,
    e2: f64,
) -> f64 {
    nu * (phi_factor(gamma, finf) / (2.0 * l_t)) * grad_norm2
        + (1.0 - nu) * gamma_r(gamma, finf, mu_t) * e2
}

fn secant_gradient(ctx: &Ctx, record: &mut InequalityRecord) {
    for ev in ctx.evals {
        let outcome = match &ev.tube {
            Some(tube) if secant_hypotheses_ok(ctx, tube) => {
                let rhs = rsi_gradient_rhs(ctx.gamma, tube.finf, ctx.spectral.l_t, ev.rgrad_norm2);
                Some((tube.inner - rhs, cmp_scale(ev, tube.inner, rhs)))
            }
            _ => None,
        };
        record.push(outcome);
    }
}

fn secant_mixed(ctx: &Ctx, record: &mut InequalityRecord) {
    record.params.insert("nu".into(), ctx.params.nu);
    for ev in ctx.evals {
        let outcome = match &ev.tube {
            Some(tube) if secant_hypotheses_ok(ctx, tube) => {
                let rhs = rsi_mixed_rhs(
                    ctx.params.nu,
                    ctx.gamma,
                    tube.finf,
                    ctx.spectral.mu_t,
                    ctx.spectral.l_t,
                    ev.rgrad_norm2,
                    tube.e * tube.e,
                );
                Some((tube.inner - rhs, cmp_scale(ev, tube.inner, rhs)))
            }
            _ => None,
        };
        record.push(outcome);
    }
}

/// `c_hat = 1 - 2 sigma2^t / (2 - beta)`, positive only when `t` exceeds the
/// connectivity threshold.
fn c_hat(ctx: &Ctx) -> f64 {
    1.0 - 2.0 * ctx.spectral.sigma2_t() / (2.0 - ctx.params.beta)
}

/// Tube conditions under which the Lipschitz step of the fixed-point error
/// bound applies: the arithmetic mean and every gossiped block within
/// `beta * gamma` of the manifold.
fn lipschitz_path_ok(ctx: &Ctx, ev: &SampleEval, tube: &TubeEval) -> bool {
    let radius = ctx.params.beta * ctx.gamma;
    tube.proj_mixed.is_some() && ev.dist_xhat <= radius && tube.dist_mixed_max <= radius
}

fn gradient_error_bound(ctx: &Ctx, record: &mut InequalityRecord) {
    let ch = c_hat(ctx);
    record.params.insert("c_hat".into(), ch);
    record.params.insert("q".into(), ctx.constants.q);
    let delta = (ctx.params.beta * ctx.gamma).min(ch / (2.0 * ctx.constants.q));
    record.params.insert("delta".into(), delta);
    for ev in ctx.evals {
        let outcome = match &ev.tube {
            Some(tube)
                if ch > 0.0 && lipschitz_path_ok(ctx, ev, tube) && tube.e <= delta =>
            {
                let lhs = ev.rgrad_norm2.sqrt();
                let rhs = 0.5 * ch * tube.e;
                Some((lhs - rhs, cmp_scale(ev, lhs, rhs)))
            }
            _ => None,
        };
        record.push(outcome);
    }
}

fn fixed_point_error_bound(ctx: &Ctx, record: &mut InequalityRecord) {
    let ch = c_hat(ctx);
    record.params.insert("c_hat".into(), ch);
    let radius = ctx.params.beta * ctx.gamma;
    for ev in ctx.evals {
        let outcome = match &ev.tube {
            Some(tube)
                if ch > 0.0 && lipschitz_path_ok(ctx, ev, tube) && tube.e <= radius =>
            {
                let rhs = ch * tube.e;
                Some((tube.residual - rhs, cmp_scale(ev, tube.residual, rhs)))
            }
            _ => None,
        };
        record.push(outcome);
    }
}

fn secant_from_lipschitz(ctx: &Ctx, record: &mut InequalityRecord) {
    let s2t = ctx.spectral.sigma2_t();
    let two_minus_beta = 2.0 - ctx.params.beta;
    let cr = (4.0 - two_minus_beta * two_minus_beta * s2t * s2t) / 16.0;
    let threshold_ok = s2t < two_minus_beta / 2.0;
    let delta_r = (ctx.params.beta * ctx.gamma)
        .min((4.0 - two_minus_beta * two_minus_beta * s2t * s2t) / (16.0 * ctx.constants.q));
    record.params.insert("c_r".into(), cr);
    record.params.insert("delta_r".into(), delta_r);
    record.params.insert("q".into(), ctx.constants.q);
    for ev in ctx.evals {
        let outcome = match &ev.tube {
            Some(tube) if threshold_ok && tube.e <= delta_r => {
                let e2 = tube.e * tube.e;
                let first = (tube.inner - cr * e2, cmp_scale(ev, tube.inner, cr * e2));
                let second = (
                    cr * e2 - 0.5 * cr * ev.rgrad_norm2,
                    cmp_scale(ev, cr * e2, 0.5 * cr * ev.rgrad_norm2),
                );
                Some(chain(first, second))
            }
            _ => None,
        };
        record.push(outcome);
    }
}

/// The two local error bounds imply one another up to a `Q * delta` shift in
/// the constant: fit the best empirical `c` (gradient form) and `c_hat`
/// (fixed-point form) on the sample set and check the transformation.
pub fn check_error_bound_equivalence(
    evals: &[SampleEval],
    w: &MixingMatrix,
    constants: &EstimatedConstants,
    params: &CheckParams,
) -> Result<InequalityRecord> {
    let mut record = InequalityRecord::new(Inequality::GradientErrorBound);
    record.name = "error_bound_equivalence".to_string();
    record.description = "the gradient-form and fixed-point-form error-bound constants agree \
                          within 1.5*Q*delta on the sample set"
        .to_string();
    let spectral = w.spectral_summary()?;
    record.params.insert("t".into(), spectral.t as f64);
    let Some(first) = evals.first() else {
        return Ok(record);
    };
    let gamma = first.stack.manifold().gamma();
    let radius = params.beta * gamma;
    let mut c_grad = f64::INFINITY;
    let mut c_fix = f64::INFINITY;
    let mut delta: f64 = 0.0;
    let mut eligible = 0usize;
    for ev in evals {
        record.samples_tested += 1;
        match &ev.tube {
            Some(tube)
                if tube.e > 1e-13 && tube.e <= radius && tube.proj_mixed.is_some() =>
            {
                eligible += 1;
                c_grad = c_grad.min(ev.rgrad_norm2.sqrt() / tube.e);
                c_fix = c_fix.min(tube.residual / tube.e);
                delta = delta.max(tube.e);
            }
            _ => record.hypothesis_failed += 1,
        }
    }
    record.params.insert("eligible".into(), eligible as f64);
    if eligible < 5 {
        // consensus-only or too-dispersed sample sets carry no information
        record.hypothesis_failed = record.samples_tested;
        return Ok(record);
    }
    record.params.insert("c".into(), c_grad);
    record.params.insert("c_hat".into(), c_fix);
    record.params.insert("delta".into(), delta);
    record.params.insert("q".into(), constants.q);
    let tolerance = 1.5 * constants.q * delta;
    let gap = (c_grad - c_fix).abs();
    let slack = tolerance - gap;
    record.satisfied = eligible;
    record.worst_margin = Some(slack);
    if slack < -REL_TOL * tolerance.max(gap) {
        record.violations = 1;
        record.satisfied -= 1;
    }
    Ok(record)
}

/// Largest relative gap between the nu-mixed secant bound at `nu = 1` and the
/// pure gradient-form bound over the hypothesis-satisfied samples. The two
/// expressions are algebraically identical at `nu = 1`.
pub fn rsi_nu_consistency_gap(evals: &[SampleEval], w: &MixingMatrix) -> Result<f64> {
    let spectral = w.spectral_summary()?;
    let mut worst: f64 = 0.0;
    for ev in evals {
        let gamma = ev.stack.manifold().gamma();
        if let Some(tube) = &ev.tube {
            let a = rsi_gradient_rhs(gamma, tube.finf, spectral.l_t, ev.rgrad_norm2);
            let b = rsi_mixed_rhs(
                1.0,
                gamma,
                tube.finf,
                spectral.mu_t,
                spectral.l_t,
                ev.rgrad_norm2,
                tube.e * tube.e,
            );
            let scale = a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
            worst = worst.max((a - b).abs() / scale);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixing::{build_graph, metropolis_weights, GraphKind};
    use crate::verify::constants::{fit_constants, FitConfig};
    use crate::verify::sampling::sample_near_consensus;

    fn setup(
        m: ManifoldSpec,
        n: usize,
        t: u32,
        eps: f64,
        count: usize,
    ) -> (Vec<SampleEval>, MixingMatrix, EstimatedConstants) {
        let w = metropolis_weights(&build_graph(GraphKind::Star, n, 0).unwrap())
            .unwrap()
            .with_power(t)
            .unwrap();
        let constants =
            fit_constants(&m, RetractionScheme::Qr, &w, &FitConfig::default()).unwrap();
        let samples = sample_near_consensus(&m, n, eps, count, 17).unwrap();
        let evals = evaluate_samples(&samples, &w).unwrap();
        (evals, w, constants)
    }

    #[test]
    fn all_inequalities_hold_on_consensus_samples() {
        let m = ManifoldSpec::stiefel(6, 2);
        let (evals, w, constants) = setup(m, 5, 2, 0.0, 20);
        let params = CheckParams::default();
        for ineq in ALL_INEQUALITIES {
            let rec = check_inequality(ineq, &evals, &w, &constants, &params).unwrap();
            assert_eq!(rec.violations, 0, "{} violated at consensus", rec.name);
            if let Some(margin) = rec.worst_margin {
                // sides vanish at consensus up to round-off of the projection
                // and gradient computations
                assert!(margin >= -1e-12, "{}: margin {margin}", rec.name);
            }
        }
    }

    #[test]
    fn sandwich_holds_on_near_consensus_sphere_samples() {
        let m = ManifoldSpec::sphere(10);
        let (evals, w, constants) = setup(m, 15, 1, 0.05, 200);
        let rec = check_inequality(
            Inequality::ConsensusSandwich,
            &evals,
            &w,
            &constants,
            &CheckParams::default(),
        )
        .unwrap();
        assert_eq!(rec.violations, 0);
        assert!(rec.satisfied > 150, "satisfied only {}", rec.satisfied);
    }

    #[test]
    fn error_bounds_hold_with_large_power_on_stiefel() {
        // star(15) has sigma2 = 14/15; t = 12 pushes sigma2^t below 1/2
        let m = ManifoldSpec::stiefel(20, 2);
        let (evals, w, constants) = setup(m, 15, 12, 0.05, 200);
        let params = CheckParams::default();
        for ineq in [
            Inequality::GradientErrorBound,
            Inequality::FixedPointErrorBound,
            Inequality::SecantFromLipschitz,
        ] {
            let rec = check_inequality(ineq, &evals, &w, &constants, &params).unwrap();
            assert_eq!(rec.violations, 0, "{}", rec.name);
            assert!(rec.satisfied > 0, "{} never exercised", rec.name);
        }
        // below the power threshold the checks must skip, not fail
        let (evals_low, w_low, constants_low) = setup(m, 15, 4, 0.05, 50);
        let rec = check_inequality(
            Inequality::FixedPointErrorBound,
            &evals_low,
            &w_low,
            &constants_low,
            &params,
        )
        .unwrap();
        assert_eq!(rec.violations, 0);
        assert_eq!(rec.satisfied, 0);
        assert_eq!(rec.hypothesis_failed, rec.samples_tested);
    }

    #[test]
    fn flat_manifold_drops_all_curvature_terms() {
        let m = ManifoldSpec::euclidean(6, 2);
        let (evals, w, constants) = setup(m, 8, 2, 0.1, 100);
        let params = CheckParams::default();
        for ineq in ALL_INEQUALITIES {
            let rec = check_inequality(ineq, &evals, &w, &constants, &params).unwrap();
            assert_eq!(rec.violations, 0, "{} violated on the flat manifold", rec.name);
        }
    }

    #[test]
    fn mixed_secant_at_nu_one_equals_gradient_form() {
        let m = ManifoldSpec::sphere(6);
        let (evals, w, _) = setup(m, 8, 2, 0.05, 100);
        let gap = rsi_nu_consistency_gap(&evals, &w).unwrap();
        assert!(gap <= 1e-12, "gap {gap}");
    }

    #[test]
    fn error_bound_equivalence_on_stiefel() {
        let m = ManifoldSpec::stiefel(8, 2);
        let (evals, w, constants) = setup(m, 10, 8, 0.05, 150);
        let rec =
            check_error_bound_equivalence(&evals, &w, &constants, &CheckParams::default())
                .unwrap();
        assert_eq!(rec.violations, 0);
        assert!(rec.params["eligible"] >= 5.0);
        // consensus samples carry no information and are skipped wholesale
        let consensus = sample_near_consensus(&m, 10, 0.0, 10, 3).unwrap();
        let w1 = metropolis_weights(&build_graph(GraphKind::Star, 10, 0).unwrap()).unwrap();
        let evals0 = evaluate_samples(&consensus, &w1).unwrap();
        let rec0 =
            check_error_bound_equivalence(&evals0, &w1, &constants, &CheckParams::default())
                .unwrap();
        assert_eq!(rec0.violations, 0);
        assert_eq!(rec0.hypothesis_failed, rec0.samples_tested);
    }

    #[test]
    fn error_bound_equivalence_on_the_flat_instance() {
        // the convex case: both constants positive and within Q*delta of
        // each other (here they coincide, since projection is the identity)
        let m = ManifoldSpec::euclidean(5, 2);
        let (evals, w, constants) = setup(m, 8, 2, 0.1, 120);
        let rec =
            check_error_bound_equivalence(&evals, &w, &constants, &CheckParams::default())
                .unwrap();
        assert_eq!(rec.violations, 0);
        assert!(rec.params["c"] > 0.0);
        assert!(rec.params["c_hat"] > 0.0);
        assert!((rec.params["c"] - rec.params["c_hat"]).abs() <= 1e-10);
    }

    #[test]
    fn inflated_constants_keep_every_check_green() {
        let m = ManifoldSpec::sphere(8);
        let (evals, w, constants) = setup(m, 12, 12, 0.05, 150);
        let inflated = constants.scaled(1.5);
        let params = CheckParams::default();
        for ineq in ALL_INEQUALITIES {
            let rec = check_inequality(ineq, &evals, &w, &inflated, &params).unwrap();
            assert_eq!(rec.violations, 0, "{} broke with inflated constants", rec.name);
        }
    }
}
