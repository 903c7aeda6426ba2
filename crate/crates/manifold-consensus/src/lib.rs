//! Decentralized consensus over compact submanifolds.
//!
//! A network of `N` agents, each holding a point on a compact submanifold of
//! `R^{d x r}`, drives the disagreement objective
//!
//! ```text
//! phi(x) = 1/4 * sum_ij  (W^t)_ij * ||x_i - x_j||^2
//! ```
//!
//! to zero by Riemannian gradient descent (QR or polar retraction) or
//! projected gradient descent, where `W` is a symmetric doubly stochastic
//! mixing matrix over the communication graph. The crate provides:
//!
//! * [`manifolds`] — Stiefel, Oblique, sphere and flat (Euclidean) instances
//!   with projections, retractions, and proximal-smoothness radii;
//! * [`mixing`] — graph construction, Metropolis weights, matrix powers, and
//!   spectral summaries (`sigma_2`, `L_t`, `mu_t`);
//! * [`problem`] — the consensus objective, its Euclidean and Riemannian
//!   gradients, the Euclidean and induced (projected) means, and error
//!   metrics;
//! * [`algorithms`] — the iteration loops, stopping rule, trajectory
//!   recording, and linear-rate estimation;
//! * [`verify`] — empirical estimation of the latent regularity constants and
//!   sampled checks of every inequality the convergence analysis relies on.
//!
//! All randomness is ChaCha12-seeded, so experiments are reproducible
//! bit-for-bit on a given platform.

pub mod algorithms;
pub mod io;
pub mod manifolds;
pub mod mixing;
pub mod problem;
pub mod verify;
