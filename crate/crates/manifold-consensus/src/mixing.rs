//! Communication graphs, Metropolis mixing matrices, and spectral summaries.
//!
//! The mixing matrix `W` is symmetric, doubly stochastic, has a positive
//! diagonal, and `null(I - W) = span(1)`; its second-largest singular value
//! `sigma_2 < 1` controls how fast one round of gossip contracts
//! disagreement. The curvature-like constants of the consensus objective are
//! `L_t = 1 - lambda_min(W^t)` and `mu_t = 1 - lambda_2(W^t)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MixingError {
    #[error("need at least 2 agents, got {0}")]
    TooFewAgents(usize),
    #[error("edge probability must lie in (0, 1], got {0}")]
    InvalidProbability(f64),
    #[error("random graph stayed disconnected after {attempts} attempts (n={n}, p={p}, seed={seed})")]
    Disconnected {
        n: usize,
        p: f64,
        seed: u64,
        attempts: usize,
    },
    #[error("matrix is not symmetric: max |W - W'| = {0:.3e}")]
    NotSymmetric(f64),
    #[error("matrix is not doubly stochastic: {0}")]
    NotStochastic(String),
    #[error("second-largest singular value must be < 1, got {0}")]
    NotContracting(f64),
    #[error("eigendecomposition residual {residual:.3e} exceeds tolerance")]
    EigenResidual { residual: f64 },
    #[error("power must be >= 1")]
    InvalidPower,
    #[error("spectral invariant violated: {0}")]
    InvariantViolated(String),
}

pub type Result<T> = std::result::Result<T, MixingError>;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphKind {
    /// Erdos-Renyi: each pair joined independently with probability `p`,
    /// resampled until connected.
    Random { p: f64 },
    /// Agent 0 is the hub; all others connect only to it.
    Star,
    /// A single ring.
    Cycle,
    /// All pairs connected.
    Complete,
}

impl std::fmt::Display for GraphKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GraphKind::Random { p } => write!(f, "random(p={p})"),
            GraphKind::Star => write!(f, "star"),
            GraphKind::Cycle => write!(f, "cycle"),
            GraphKind::Complete => write!(f, "complete"),
        }
    }
}

/// An undirected connected graph on `n` agents. Edges are stored as ordered
/// pairs `(i, j)` with `i < j` and no self-loops; self-weights live on the
/// diagonal of the mixing matrix.
#[derive(Clone, Debug)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    kind: GraphKind,
    seed: u64,
}

impl Graph {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.n];
        for &(i, j) in &self.edges {
            deg[i] += 1;
            deg[j] += 1;
        }
        deg
    }

    pub fn is_connected(&self) -> bool {
        connected(self.n, &self.edges)
    }
}

fn connected(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut adj = vec![Vec::new(); n];
    for &(i, j) in edges {
        adj[i].push(j);
        adj[j].push(i);
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    let mut count = 1;
    while let Some(v) = stack.pop() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                count += 1;
                stack.push(w);
            }
        }
    }
    count == n
}

const MAX_RANDOM_ATTEMPTS: usize = 100;

/// Build a connected communication graph. The seed only matters for
/// `Random`; deterministic topologies ignore it.
pub fn build_graph(kind: GraphKind, n: usize, seed: u64) -> Result<Graph> {
    if n < 2 {
        return Err(MixingError::TooFewAgents(n));
    }
    let edges = match kind {
        GraphKind::Star => (1..n).map(|i| (0, i)).collect(),
        GraphKind::Cycle => {
            let mut set = std::collections::BTreeSet::new();
            for i in 0..n {
                let j = (i + 1) % n;
                set.insert((i.min(j), i.max(j)));
            }
            set.into_iter().collect()
        }
        GraphKind::Complete => {
            let mut edges = Vec::with_capacity(n * (n - 1) / 2);
            for i in 0..n {
                for j in (i + 1)..n {
                    edges.push((i, j));
                }
            }
            edges
        }
        GraphKind::Random { p } => {
            if !(p > 0.0 && p <= 1.0) {
                return Err(MixingError::InvalidProbability(p));
            }
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let mut found = None;
            for _ in 0..MAX_RANDOM_ATTEMPTS {
                let mut edges = Vec::new();
                for i in 0..n {
                    for j in (i + 1)..n {
                        if rng.random::<f64>() < p {
                            edges.push((i, j));
                        }
                    }
                }
                if connected(n, &edges) {
                    found = Some(edges);
                    break;
                }
            }
            found.ok_or(MixingError::Disconnected {
                n,
                p,
                seed,
                attempts: MAX_RANDOM_ATTEMPTS,
            })?
        }
    };
    Ok(Graph {
        n,
        edges,
        kind,
        seed,
    })
}

/// Symmetric doubly stochastic mixing matrix `W` together with a cached power
/// `W^t`. Validated on construction; immutable afterwards.
#[derive(Clone, Debug)]
pub struct MixingMatrix {
    w: DMatrix<f64>,
    t: u32,
    wt: DMatrix<f64>,
    eigenvalues: DVector<f64>,
}

const STOCHASTIC_TOL: f64 = 1e-12;
const POWER_TOL: f64 = 1e-10;

impl MixingMatrix {
    /// Validate `w` against the mixing-matrix requirements and wrap it with
    /// `t = 1`.
    pub fn new(w: DMatrix<f64>) -> Result<Self> {
        let n = w.nrows();
        if n != w.ncols() || n < 2 {
            return Err(MixingError::TooFewAgents(n));
        }
        let asym = (&w - w.transpose()).amax();
        if asym > STOCHASTIC_TOL {
            return Err(MixingError::NotSymmetric(asym));
        }
        for i in 0..n {
            if w[(i, i)] <= 0.0 {
                return Err(MixingError::NotStochastic(format!(
                    "diagonal entry W[{i},{i}] = {} is not positive",
                    w[(i, i)]
                )));
            }
            let mut row_sum = 0.0;
            for j in 0..n {
                if w[(i, j)] < -STOCHASTIC_TOL {
                    return Err(MixingError::NotStochastic(format!(
                        "negative entry W[{i},{j}] = {}",
                        w[(i, j)]
                    )));
                }
                row_sum += w[(i, j)];
            }
            if (row_sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(MixingError::NotStochastic(format!(
                    "row {i} sums to {row_sum}"
                )));
            }
        }
        let eigenvalues = validated_eigenvalues(&w)?;
        let sigma2 = second_largest_abs(&eigenvalues);
        if sigma2 >= 1.0 {
            return Err(MixingError::NotContracting(sigma2));
        }
        let wt = w.clone();
        Ok(MixingMatrix {
            w,
            t: 1,
            wt,
            eigenvalues,
        })
    }

    /// The same `W` with the cached power replaced by `W^t`.
    pub fn with_power(&self, t: u32) -> Result<Self> {
        if t == 0 {
            return Err(MixingError::InvalidPower);
        }
        let wt = power(self, t);
        Ok(MixingMatrix {
            w: self.w.clone(),
            t,
            wt,
            eigenvalues: self.eigenvalues.clone(),
        })
    }

    pub fn n(&self) -> usize {
        self.w.nrows()
    }

    pub fn t(&self) -> u32 {
        self.t
    }

    pub fn w(&self) -> &DMatrix<f64> {
        &self.w
    }

    /// Cached `W^t`.
    pub fn wt(&self) -> &DMatrix<f64> {
        &self.wt
    }

    /// Eigenvalues of `W` sorted in descending order (leading one is 1).
    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    /// Spectral summary at this matrix's cached power.
    pub fn spectral_summary(&self) -> Result<SpectralSummary> {
        spectral_summary(self, self.t)
    }
}

/// Metropolis-Hastings weights: `W_ij = 1 / (1 + max(deg_i, deg_j))` on
/// edges, diagonal chosen so rows sum to one. Satisfies every mixing-matrix
/// requirement by construction on a connected graph.
pub fn metropolis_weights(g: &Graph) -> Result<MixingMatrix> {
    let n = g.n();
    let deg = g.degrees();
    let mut w = DMatrix::zeros(n, n);
    for &(i, j) in g.edges() {
        let weight = 1.0 / (1.0 + deg[i].max(deg[j]) as f64);
        w[(i, j)] = weight;
        w[(j, i)] = weight;
    }
    for i in 0..n {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| w[(i, j)]).sum();
        w[(i, i)] = 1.0 - off;
    }
    MixingMatrix::new(w)
}

fn validated_eigenvalues(w: &DMatrix<f64>) -> Result<DVector<f64>> {
    let eig = SymmetricEigen::new(w.clone());
    // residual check: ||W v - lambda v|| <= 1e-10 ||W|| per eigenpair
    let scale = w.norm();
    let mut worst = 0.0f64;
    for k in 0..w.nrows() {
        let v = eig.eigenvectors.column(k);
        let residual = (w * v - v * eig.eigenvalues[k]).norm();
        worst = worst.max(residual);
    }
    if worst > 1e-10 * scale.max(1.0) {
        return Err(MixingError::EigenResidual { residual: worst });
    }
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(DVector::from_vec(vals))
}

fn second_largest_abs(sorted_desc: &DVector<f64>) -> f64 {
    let n = sorted_desc.len();
    sorted_desc[1].abs().max(sorted_desc[n - 1].abs())
}

/// `W^t` via eigendecomposition reconstruction, re-symmetrized. The result is
/// symmetric doubly stochastic to 1e-10.
pub fn power(w: &MixingMatrix, t: u32) -> DMatrix<f64> {
    if t == 1 {
        return w.w().clone();
    }
    let eig = SymmetricEigen::new(w.w().clone());
    let powered = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|l| l.powi(t as i32)),
    );
    let recon = &eig.eigenvectors * DMatrix::from_diagonal(&powered) * eig.eigenvectors.transpose();
    let sym = (&recon + recon.transpose()) * 0.5;
    debug_assert!(
        (0..sym.nrows()).all(|i| (sym.row(i).sum() - 1.0).abs() <= POWER_TOL),
        "power lost double stochasticity"
    );
    sym
}

/// Spectral quantities at power `t`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SpectralSummary {
    /// Second-largest singular value of `W` itself.
    pub sigma2: f64,
    pub t: u32,
    /// Second-largest eigenvalue of `W^t`.
    pub lambda2_t: f64,
    /// Smallest eigenvalue of `W^t`.
    pub lambda_n_t: f64,
    /// `1 - lambda_min(W^t)`.
    pub l_t: f64,
    /// `1 - lambda_2(W^t)`.
    pub mu_t: f64,
    /// `2 / (mu_t + L_t)`.
    pub alpha_opt: f64,
}

impl SpectralSummary {
    /// `sigma_2^t`, the one-shot gossip contraction factor at this power.
    pub fn sigma2_t(&self) -> f64 {
        self.sigma2.powi(self.t as i32)
    }
}

/// Compute the spectral summary of `W^t` from the eigenvalues of `W`. The
/// powered eigenvalues are re-sorted, so even powers are handled correctly.
pub fn spectral_summary(w: &MixingMatrix, t: u32) -> Result<SpectralSummary> {
    if t == 0 {
        return Err(MixingError::InvalidPower);
    }
    let vals = w.eigenvalues();
    let n = vals.len();
    if (vals[0] - 1.0).abs() > 1e-10 {
        return Err(MixingError::NotStochastic(format!(
            "leading eigenvalue is {} rather than 1",
            vals[0]
        )));
    }
    let sigma2 = second_largest_abs(vals);
    let mut powered: Vec<f64> = vals.iter().map(|l| l.powi(t as i32)).collect();
    powered.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let lambda2_t = powered[1];
    let lambda_n_t = powered[n - 1];
    let l_t = 1.0 - lambda_n_t;
    let mu_t = 1.0 - lambda2_t;
    let alpha_opt = 2.0 / (mu_t + l_t);
    if !(mu_t > 0.0 && mu_t <= l_t + 1e-14 && l_t <= 2.0 + 1e-14) {
        return Err(MixingError::InvariantViolated(format!(
            "expected 0 < mu_t <= L_t <= 2, got mu_t={mu_t}, L_t={l_t}"
        )));
    }
    let rate_gap = (l_t - mu_t) / (l_t + mu_t);
    if rate_gap > sigma2.powi(t as i32) + 1e-12 {
        return Err(MixingError::InvariantViolated(format!(
            "(L_t-mu_t)/(L_t+mu_t) = {rate_gap} exceeds sigma2^t = {}",
            sigma2.powi(t as i32)
        )));
    }
    Ok(SpectralSummary {
        sigma2,
        t,
        lambda2_t,
        lambda_n_t,
        l_t,
        mu_t,
        alpha_opt,
    })
}

/// Smallest power for which `sigma_2^t` drops below `target`, i.e.
/// `log_{sigma_2}(target)` clamped to at least 1 (a single round of gossip is
/// the minimum, and exact-averaging matrices have numerically zero
/// `sigma_2`). Infinite when `target` is unreachable.
pub fn power_threshold(sigma2: f64, target: f64) -> f64 {
    assert!(target > 0.0 && target < 1.0);
    if sigma2 <= 1e-12 {
        return 1.0;
    }
    if sigma2 >= 1.0 {
        return f64::INFINITY;
    }
    (target.ln() / sigma2.ln()).max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn metropolis(kind: GraphKind, n: usize, seed: u64) -> MixingMatrix {
        metropolis_weights(&build_graph(kind, n, seed).unwrap()).unwrap()
    }

    #[test]
    fn star_and_cycle_edge_sets() {
        let star = build_graph(GraphKind::Star, 3, 0).unwrap();
        assert_eq!(star.edges(), &[(0, 1), (0, 2)]);
        let cycle = build_graph(GraphKind::Cycle, 3, 0).unwrap();
        assert_eq!(cycle.edges(), &[(0, 1), (0, 2), (1, 2)]);
        let complete = build_graph(GraphKind::Complete, 4, 0).unwrap();
        assert_eq!(complete.edges().len(), 6);
    }

    #[test]
    fn cycle_of_two_has_a_single_edge() {
        let g = build_graph(GraphKind::Cycle, 2, 0).unwrap();
        assert_eq!(g.edges(), &[(0, 1)]);
    }

    #[test]
    fn random_graph_is_connected_and_deterministic() {
        let a = build_graph(GraphKind::Random { p: 0.5 }, 15, 42).unwrap();
        let b = build_graph(GraphKind::Random { p: 0.5 }, 15, 42).unwrap();
        assert_eq!(a.edges(), b.edges());
        assert!(a.is_connected());
        let c = build_graph(GraphKind::Random { p: 0.5 }, 15, 43).unwrap();
        assert_ne!(a.edges(), c.edges());
    }

    #[test]
    fn cycle3_metropolis_is_the_averaging_matrix() {
        let w = metropolis(GraphKind::Cycle, 3, 0);
        for i in 0..3 {
            for j in 0..3 {
                assert_relative_eq!(w.w()[(i, j)], 1.0 / 3.0, epsilon = 1e-14);
            }
        }
        let s = w.spectral_summary().unwrap();
        assert!(s.sigma2.abs() <= 1e-12);
        assert_relative_eq!(s.mu_t, 1.0, epsilon = 1e-12);
        assert_relative_eq!(s.l_t, 1.0, epsilon = 1e-12);
        assert_relative_eq!(s.alpha_opt, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn star3_metropolis_matrix_and_spectrum() {
        let w = metropolis(GraphKind::Star, 3, 0);
        let expected = DMatrix::from_row_slice(
            3,
            3,
            &[
                1.0 / 3.0,
                1.0 / 3.0,
                1.0 / 3.0,
                1.0 / 3.0,
                2.0 / 3.0,
                0.0,
                1.0 / 3.0,
                0.0,
                2.0 / 3.0,
            ],
        );
        assert!((w.w() - expected).amax() <= 1e-14);
        let s = spectral_summary(&w, 1).unwrap();
        assert_relative_eq!(s.sigma2, 2.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(s.lambda2_t, 2.0 / 3.0, epsilon = 1e-12);
        assert!(s.lambda_n_t.abs() <= 1e-12);
        assert_relative_eq!(s.l_t, 1.0, epsilon = 1e-12);
        assert_relative_eq!(s.mu_t, 1.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(s.alpha_opt, 1.5, epsilon = 1e-12);
    }

    #[test]
    fn star3_squared_spectrum() {
        let w = metropolis(GraphKind::Star, 3, 0);
        let s = spectral_summary(&w, 2).unwrap();
        assert_relative_eq!(s.lambda2_t, 4.0 / 9.0, epsilon = 1e-12);
        assert_relative_eq!(s.mu_t, 5.0 / 9.0, epsilon = 1e-12);
        assert!(s.lambda_n_t.abs() <= 1e-12);
        assert_relative_eq!(s.l_t, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn cycle4_circulant_spectrum() {
        let w = metropolis(GraphKind::Cycle, 4, 0);
        assert_relative_eq!(w.w()[(0, 0)], 1.0 / 3.0, epsilon = 1e-14);
        assert_relative_eq!(w.w()[(0, 1)], 1.0 / 3.0, epsilon = 1e-14);
        assert_relative_eq!(w.w()[(0, 2)], 0.0, epsilon = 1e-14);
        assert_relative_eq!(w.w()[(0, 3)], 1.0 / 3.0, epsilon = 1e-14);
        let s = spectral_summary(&w, 1).unwrap();
        assert_relative_eq!(s.sigma2, 1.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(s.l_t, 4.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(s.mu_t, 2.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(s.alpha_opt, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn power_examples() {
        let w = metropolis(GraphKind::Star, 3, 0);
        assert_eq!(power(&w, 1), *w.w());
        let w2 = power(&w, 2);
        let expected = DMatrix::from_row_slice(
            3,
            3,
            &[
                1.0 / 3.0,
                1.0 / 3.0,
                1.0 / 3.0,
                1.0 / 3.0,
                5.0 / 9.0,
                1.0 / 9.0,
                1.0 / 3.0,
                1.0 / 9.0,
                5.0 / 9.0,
            ],
        );
        assert!((w2 - expected).amax() <= 1e-12);

        // the averaging matrix J is idempotent
        let j = metropolis(GraphKind::Cycle, 3, 0);
        for t in [2u32, 5, 9] {
            assert!((power(&j, t) - j.w()).amax() <= 1e-12);
        }
    }

    #[test]
    fn complete_of_two_averages_exactly() {
        let w = metropolis(GraphKind::Complete, 2, 0);
        let s = w.spectral_summary().unwrap();
        assert!(s.sigma2.abs() <= 1e-12);
        assert_relative_eq!(w.w()[(0, 1)], 0.5, epsilon = 1e-14);
    }

    #[test]
    fn row_distance_bound_and_contraction() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(1);
        for (kind, n) in [
            (GraphKind::Star, 15),
            (GraphKind::Cycle, 15),
            (GraphKind::Random { p: 0.5 }, 15),
            (GraphKind::Complete, 6),
        ] {
            let w = metropolis(kind, n, 3);
            let sigma2 = w.spectral_summary().unwrap().sigma2;
            assert!(sigma2 < 1.0);
            for t in 1..=10u32 {
                let wt = power(&w, t);
                let s2t = sigma2.powi(t as i32);
                // every row of W^t is within sqrt(N) sigma2^t of uniform in l1
                for i in 0..n {
                    let row_l1: f64 = (0..n).map(|j| (wt[(i, j)] - 1.0 / n as f64).abs()).sum();
                    assert!(
                        row_l1 <= (n as f64).sqrt() * s2t + 1e-12,
                        "{kind} t={t} row {i}: {row_l1} vs {}",
                        (n as f64).sqrt() * s2t
                    );
                }
                // ||(W^t - J) y|| <= sigma2^t ||y - J y||
                if t <= 3 {
                    for _ in 0..34 {
                        let y = nalgebra::DVector::from_fn(n, |_, _| {
                            rng.sample::<f64, _>(rand_distr::StandardNormal)
                        });
                        let mean = y.mean();
                        let centered = y.add_scalar(-mean);
                        let mixed = &wt * &y;
                        let mixed_centered = mixed.add_scalar(-mean);
                        assert!(mixed_centered.norm() <= s2t * centered.norm() + 1e-12);
                    }
                }
                // rate comparison between the optimal-step and unit-step factors
                let s = spectral_summary(&w, t).unwrap();
                assert!((s.l_t - s.mu_t) / (s.l_t + s.mu_t) <= s2t + 1e-12);
            }
        }
    }

    #[test]
    fn power_thresholds() {
        assert_relative_eq!(
            power_threshold(2.0 / 3.0, 1.0 / (4.0 * 3.0f64.sqrt())),
            (1.0 / (4.0 * 3.0f64.sqrt())).ln() / (2.0f64 / 3.0).ln(),
            epsilon = 1e-12
        );
        assert!((power_threshold(2.0 / 3.0, 1.0 / (4.0 * 3.0f64.sqrt())) - 4.78).abs() < 0.01);
        assert_eq!(power_threshold(0.0, 0.5), 1.0);
    }

    #[test]
    fn rejects_invalid_matrices() {
        let asym = DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.4, 0.6]);
        assert!(matches!(
            MixingMatrix::new(asym),
            Err(MixingError::NotSymmetric(_))
        ));
        let bad_rows = DMatrix::from_row_slice(2, 2, &[0.7, 0.5, 0.5, 0.7]);
        assert!(matches!(
            MixingMatrix::new(bad_rows),
            Err(MixingError::NotStochastic(_))
        ));
        // disconnected: block diagonal has a repeated unit eigenvalue
        let block = DMatrix::from_row_slice(
            4,
            4,
            &[
                0.5, 0.5, 0.0, 0.0, //
                0.5, 0.5, 0.0, 0.0, //
                0.0, 0.0, 0.5, 0.5, //
                0.0, 0.0, 0.5, 0.5,
            ],
        );
        assert!(matches!(
            MixingMatrix::new(block),
            Err(MixingError::NotContracting(_))
        ));
        assert!(matches!(
            build_graph(GraphKind::Random { p: 1.5 }, 4, 0),
            Err(MixingError::InvalidProbability(_))
        ));
        assert!(matches!(
            build_graph(GraphKind::Star, 1, 0),
            Err(MixingError::TooFewAgents(1))
        ));
    }
}
