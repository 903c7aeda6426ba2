//! Empirical verification of the regularity structure behind the consensus
//! analysis.
//!
//! The convergence theory is conditional on a handful of constants that are
//! known to exist but are never computed in closed form: the second-order
//! retraction constant `M0`, the retraction-vs-projection gap `M1`, the
//! mean-gap constant `M2`, the tangent-projector Lipschitz constant `L_p`,
//! and the projection linearization constant `Q`. This module estimates them
//! by max-ratio sampling (with a 1.5x safety factor, flagged as empirical),
//! then tests every inequality the analysis uses at sampled near-consensus
//! configurations, reporting hold / violate / hypothesis-failed counts per
//! inequality.

mod checks;
mod constants;
mod neighborhood;
mod report;
mod sampling;

pub use checks::{
    check_error_bound_equivalence, check_inequality, evaluate_samples, rsi_nu_consistency_gap,
    CheckParams, Inequality, InequalityRecord, SampleEval, ALL_INEQUALITIES,
};
pub use constants::{fit_constants, EstimatedConstants, FitConfig};
pub use neighborhood::{neighborhood_constants, NeighborhoodConstants};
pub use report::{run_regularity_suite, RegularityReport, SuiteConfig};
pub use sampling::sample_near_consensus;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("perturbation scales must span at least three decades, got [{min:.3e}, {max:.3e}]")]
    InsufficientScales { min: f64, max: f64 },
    #[error("sampling exhausted after {attempts} attempts ({accepted} of {requested} accepted); epsilon is likely too large for the proximal tube")]
    SamplingExhausted {
        attempts: usize,
        accepted: usize,
        requested: usize,
    },
    #[error("theoretical neighborhood is empty: {quantity} = {value:.6e} is not positive")]
    NonPositiveDelta { quantity: &'static str, value: f64 },
    #[error(transparent)]
    Problem(#[from] crate::problem::ProblemError),
    #[error(transparent)]
    Mixing(#[from] crate::mixing::MixingError),
}

pub type Result<T> = std::result::Result<T, VerifyError>;
