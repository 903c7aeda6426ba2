//! The explicitly characterized neighborhoods in which the convergence
//! theorems operate, evaluated by direct substitution of the fitted
//! constants.

use super::constants::EstimatedConstants;
use super::{Result, VerifyError};
use crate::manifolds::ManifoldSpec;
use crate::mixing::SpectralSummary;
use serde::Serialize;

/// Radii and step bounds of the theoretical neighborhoods.
///
/// `delta0` bounds the blockwise error for the unit-step contraction
/// argument; `delta1`/`delta2` bound the stacked and blockwise errors for the
/// general-step argument; `alpha_max` is the admissible step size there.
/// `phi` and `gamma_r` are evaluated at a caller-supplied blockwise error.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct NeighborhoodConstants {
    pub delta0: f64,
    pub delta1: f64,
    pub delta2: f64,
    /// `2 (1 - finf^2 / (2 gamma))`, in (1, 2] under the hypotheses.
    pub phi: f64,
    /// `(1 - finf^2 / gamma) mu_t / 4`.
    pub gamma_r: f64,
    /// `(1 - nu) gamma_r`.
    pub gamma_r_tilde: f64,
    pub alpha_max: f64,
}

/// Substitute fitted constants and spectral quantities into the neighborhood
/// formulas. Errors with [`VerifyError::NonPositiveDelta`] when a radius or
/// the step bound comes out non-positive, which signals that the theory's
/// neighborhood is empty at this `(N, t)` for the fitted constants.
pub fn neighborhood_constants(
    constants: &EstimatedConstants,
    spectral: &SpectralSummary,
    m: &ManifoldSpec,
    n_agents: usize,
    nu: f64,
    finf: f64,
) -> Result<NeighborhoodConstants> {
    assert!((0.0..=1.0).contains(&nu), "nu must lie in [0, 1]");
    assert!(finf >= 0.0);
    let gamma = m.gamma();
    let s2t = spectral.sigma2_t();
    let sqrt_n = (n_agents as f64).sqrt();
    let (m0, m1, m2, l_p) = (constants.m0, constants.m1, constants.m2, constants.l_p);
    let l_t = spectral.l_t;

    let delta0 = gamma
        .min((gamma / (2.0 * m2)).sqrt())
        .min(1.0 / (16.0 * m0 + 8.0 * m1 + 4.0 * l_p))
        .min((1.0 - 2.0 * s2t) / (8.0 * m1 * sqrt_n));
    if delta0.is_nan() || delta0 <= 0.0 {
        return Err(VerifyError::NonPositiveDelta {
            quantity: "delta0",
            value: delta0,
        });
    }

    let delta2 = (1.0f64 / 32.0).min(gamma).min((2.0 * gamma).sqrt() / 6.0);
    let mut delta1 = (delta2 / 4.0)
        .min(1.0 / (2.0 * m2 + 2.0 * l_p * sqrt_n + 2.0 * l_t * l_t))
        .min((gamma / m2).sqrt());
    if gamma.is_finite() {
        // on the flat instance the tube constraint is vacuous and this term
        // would spuriously collapse to zero
        delta1 = delta1.min(1.0 / (2.0 * m1 * gamma));
    }
    if delta1.is_nan() || delta1 <= 0.0 {
        return Err(VerifyError::NonPositiveDelta {
            quantity: "delta1",
            value: delta1,
        });
    }

    let tube_factor = if gamma.is_infinite() {
        1.0
    } else {
        1.0 - finf * finf / gamma
    };
    let gamma_r = tube_factor * spectral.mu_t / 4.0;
    if gamma_r.is_nan() || gamma_r <= 0.0 {
        return Err(VerifyError::NonPositiveDelta {
            quantity: "gamma_r",
            value: gamma_r,
        });
    }
    let phi = if gamma.is_infinite() {
        2.0
    } else {
        2.0 * (1.0 - finf * finf / (2.0 * gamma))
    };
    let gr = (1.0 - nu) * gamma_r;
    let alpha_max = (nu * phi * gr * (1.0 - 2.0 * gr)
        / (l_t * (1.0 - gr) * ((1.0 - 2.0 * gr) * m0 * m0 * l_t * l_t * n_agents as f64 * delta1 * delta1 + gr)))
        .min(1.0)
        .min(1.0 / m0);
    if alpha_max.is_nan() || alpha_max <= 0.0 {
        return Err(VerifyError::NonPositiveDelta {
            quantity: "alpha_max",
            value: alpha_max,
        });
    }

    Ok(NeighborhoodConstants {
        delta0,
        delta1,
        delta2,
        phi,
        gamma_r,
        gamma_r_tilde: gr,
        alpha_max,
    })
}
