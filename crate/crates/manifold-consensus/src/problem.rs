//! The consensus objective, its gradients, the two notions of mean, and the
//! error metrics reported by every experiment.
//!
//! The stacked iterate is kept as `N` separate `d x r` blocks; Kronecker
//! products against `W^t (x) I` are realized blockwise so nothing of size
//! `Nd x Nd` is ever materialized. The stacked norm is the square root of the
//! sum of squared block Frobenius norms, and `||x||_{F,inf}` is the largest
//! block norm.

use crate::manifolds::{AmbientMatrix, ManifoldError, ManifoldSpec};
use crate::mixing::MixingMatrix;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("stack needs at least 2 agents, got {0}")]
    TooFewAgents(usize),
    #[error("agent count mismatch: stack has {stack} blocks, mixing matrix has {mixing} rows")]
    DimensionMismatch { stack: usize, mixing: usize },
    #[error("block {index}: {source}")]
    Block {
        index: usize,
        source: ManifoldError,
    },
    #[error("block {0} contains non-finite entries")]
    NonFinite(usize),
    #[error("Euclidean mean lies outside the proximal tube (distance {distance:.3e} >= {radius:.3e}); the induced mean is undefined")]
    OutsideTube { distance: f64, radius: f64 },
}

pub type Result<T> = std::result::Result<T, ProblemError>;

/// The stacked iterate: `N` manifold points of identical shape.
#[derive(Clone, Debug)]
pub struct AgentStack {
    blocks: Vec<AmbientMatrix>,
    manifold: ManifoldSpec,
}

impl AgentStack {
    /// Validates block count, shapes, finiteness, and manifold membership.
    pub fn new(manifold: ManifoldSpec, blocks: Vec<AmbientMatrix>) -> Result<Self> {
        if blocks.len() < 2 {
            return Err(ProblemError::TooFewAgents(blocks.len()));
        }
        for (index, b) in blocks.iter().enumerate() {
            if b.iter().any(|v| !v.is_finite()) {
                return Err(ProblemError::NonFinite(index));
            }
            manifold
                .check_member(b)
                .map_err(|source| ProblemError::Block { index, source })?;
        }
        Ok(AgentStack { blocks, manifold })
    }

    /// All agents at the same point.
    pub fn consensus(manifold: ManifoldSpec, point: AmbientMatrix, n: usize) -> Result<Self> {
        Self::new(manifold, vec![point; n])
    }

    pub fn n(&self) -> usize {
        self.blocks.len()
    }

    pub fn manifold(&self) -> &ManifoldSpec {
        &self.manifold
    }

    pub fn blocks(&self) -> &[AmbientMatrix] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> &AmbientMatrix {
        &self.blocks[i]
    }

    fn check_mixing(&self, w: &MixingMatrix) -> Result<()> {
        if w.n() != self.n() {
            return Err(ProblemError::DimensionMismatch {
                stack: self.n(),
                mixing: w.n(),
            });
        }
        Ok(())
    }
}

/// Stacked Euclidean norm: `sqrt(sum_i ||b_i||_F^2)`.
pub fn stack_norm(blocks: &[AmbientMatrix]) -> f64 {
    blocks
        .iter()
        .map(|b| b.norm_squared())
        .sum::<f64>()
        .sqrt()
}

/// `max_i ||b_i||_F`, the blockwise sup norm.
pub fn stack_finf(blocks: &[AmbientMatrix]) -> f64 {
    blocks.iter().map(|b| b.norm()).fold(0.0, f64::max)
}

/// Blockwise difference against a single reference point.
pub fn diffs_from(blocks: &[AmbientMatrix], point: &AmbientMatrix) -> Vec<AmbientMatrix> {
    blocks.iter().map(|b| b - point).collect()
}

/// One round of blockwise gossip: block `i` of `W^t x`, i.e.
/// `sum_j (W^t)_ij x_j`.
pub fn mixed_blocks(s: &AgentStack, w: &MixingMatrix) -> Result<Vec<AmbientMatrix>> {
    s.check_mixing(w)?;
    let n = s.n();
    let wt = w.wt();
    let (d, r) = s.manifold().dims();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut acc = AmbientMatrix::zeros(d, r);
        for j in 0..n {
            let weight = wt[(i, j)];
            if weight != 0.0 {
                acc.zip_apply(s.block(j), |a, x| *a += weight * x);
            }
        }
        out.push(acc);
    }
    Ok(out)
}

/// `phi(x) = 1/4 sum_ij (W^t)_ij ||x_i - x_j||^2`. Zero exactly on the
/// consensus set.
pub fn objective(s: &AgentStack, w: &MixingMatrix) -> Result<f64> {
    s.check_mixing(w)?;
    let wt = w.wt();
    let n = s.n();
    let mut total = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let weight = wt[(i, j)];
            if weight != 0.0 {
                total += weight * (s.block(i) - s.block(j)).norm_squared();
            }
        }
    }
    // the double sum counts each unordered pair twice
    Ok(total / 2.0)
}

/// Blockwise Euclidean gradient: block `i` is `x_i - sum_j (W^t)_ij x_j`.
/// The blocks sum to zero because `W^t` is doubly stochastic.
pub fn euclidean_gradient(s: &AgentStack, w: &MixingMatrix) -> Result<Vec<AmbientMatrix>> {
    let mixed = mixed_blocks(s, w)?;
    Ok(s.blocks()
        .iter()
        .zip(mixed)
        .map(|(x, m)| x - m)
        .collect())
}

/// Riemannian gradient: the Euclidean gradient projected onto each block's
/// tangent space.
pub fn riemannian_gradient(s: &AgentStack, w: &MixingMatrix) -> Result<Vec<AmbientMatrix>> {
    let egrad = euclidean_gradient(s, w)?;
    Ok(s.blocks()
        .iter()
        .zip(egrad.iter())
        .map(|(x, g)| s.manifold().tangent_project_unchecked(x, g))
        .collect())
}

/// Arithmetic mean of the blocks.
pub fn euclidean_mean(s: &AgentStack) -> AmbientMatrix {
    let (d, r) = s.manifold().dims();
    let mut acc = AmbientMatrix::zeros(d, r);
    for b in s.blocks() {
        acc += b;
    }
    acc / s.n() as f64
}

/// The induced mean: projection of the arithmetic mean onto the manifold,
/// i.e. the nearest consensus configuration. Errors when the arithmetic mean
/// falls outside the proximal tube, where the projection is not single-valued
/// and the analysis is undefined.
pub fn induced_mean(s: &AgentStack) -> Result<AmbientMatrix> {
    let xhat = euclidean_mean(s);
    project_mean(s.manifold(), &xhat).map(|(mean, _)| mean)
}

fn project_mean(m: &ManifoldSpec, xhat: &AmbientMatrix) -> Result<(AmbientMatrix, f64)> {
    let radius = m.proximal_radius();
    let projected = m.project(xhat).map_err(|_| ProblemError::OutsideTube {
        distance: f64::INFINITY,
        radius,
    })?;
    let distance = (xhat - &projected).norm();
    if distance >= radius {
        return Err(ProblemError::OutsideTube { distance, radius });
    }
    Ok((projected, distance))
}

/// Per-iterate error metrics. `normalized_error` (`||x - xbar|| / N`) is the
/// quantity the stopping rule applies to.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ConsensusMetrics {
    /// `||x - xhat||`, distance to the stacked arithmetic mean.
    pub euclidean_error: f64,
    /// `||x - xbar||`, distance to the consensus set.
    pub manifold_error: f64,
    /// `max_i ||x_i - xbar||`.
    pub finf_error: f64,
    /// `||x - xbar|| / N`.
    pub normalized_error: f64,
    pub objective: f64,
    /// `||grad phi(x)||` over the stack.
    pub rgrad_norm: f64,
}

/// Euclidean-only metrics plus the manifold-dependent part when the
/// arithmetic mean lies inside the proximal tube. Iteration loops use this so
/// a transiently dispersed iterate degrades the record rather than aborting
/// the run.
#[derive(Clone, Debug)]
pub struct LenientMetrics {
    pub objective: f64,
    pub euclidean_error: f64,
    pub rgrad_norm: f64,
    pub manifold: Option<ManifoldPart>,
}

#[derive(Clone, Debug)]
pub struct ManifoldPart {
    pub mean: AmbientMatrix,
    pub manifold_error: f64,
    pub finf_error: f64,
    pub normalized_error: f64,
}

pub fn lenient_metrics(s: &AgentStack, w: &MixingMatrix) -> Result<LenientMetrics> {
    s.check_mixing(w)?;
    let objective_value = objective(s, w)?;
    let rgrad = riemannian_gradient(s, w)?;
    let rgrad_norm = stack_norm(&rgrad);
    let xhat = euclidean_mean(s);
    let euclidean_error = stack_norm(&diffs_from(s.blocks(), &xhat));
    let manifold = match project_mean(s.manifold(), &xhat) {
        Ok((mean, _)) => {
            let diffs = diffs_from(s.blocks(), &mean);
            let manifold_error = stack_norm(&diffs);
            Some(ManifoldPart {
                finf_error: stack_finf(&diffs),
                normalized_error: manifold_error / s.n() as f64,
                manifold_error,
                mean,
            })
        }
        Err(ProblemError::OutsideTube { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(LenientMetrics {
        objective: objective_value,
        euclidean_error,
        rgrad_norm,
        manifold,
    })
}

/// Full metrics; errors with [`ProblemError::OutsideTube`] when the induced
/// mean is undefined.
pub fn metrics(s: &AgentStack, w: &MixingMatrix) -> Result<ConsensusMetrics> {
    let lenient = lenient_metrics(s, w)?;
    let xhat = euclidean_mean(s);
    let part = match lenient.manifold {
        Some(p) => p,
        None => {
            // re-derive the distance for the error payload; the lenient path
            // already established the mean is outside the tube
            let (_, distance) = project_mean(s.manifold(), &xhat)?;
            return Err(ProblemError::OutsideTube {
                distance,
                radius: s.manifold().proximal_radius(),
            });
        }
    };
    Ok(ConsensusMetrics {
        euclidean_error: lenient.euclidean_error,
        manifold_error: part.manifold_error,
        finf_error: part.finf_error,
        normalized_error: part.normalized_error,
        objective: lenient.objective,
        rgrad_norm: lenient.rgrad_norm,
    })
}
