//! Compact submanifolds of `R^{d x r}` with projections, retractions, and
//! proximal-smoothness data.
//!
//! Four instances are supported:
//!
//! * `Stiefel(d, r)`: matrices with orthonormal columns, `x' x = I_r`;
//! * `Oblique(d, r)`: matrices with unit-norm columns, `diag(x' x) = 1`;
//! * `Sphere(d)`: the unit sphere, identical to `Oblique(d, 1)`;
//! * `Euclidean(d, r)`: the flat ambient space as a degenerate instance, so
//!   the convex consensus theory can serve as an oracle.
//!
//! Each manifold carries its proximal radius `2*gamma`: the nearest-point
//! projection is single-valued on the open tube of points within distance
//! `2*gamma` of the manifold. The Stiefel manifold has radius 1; the sphere
//! (and hence Oblique, columnwise) also has radius 1, since projection onto
//! the unit sphere is ambiguous only at the origin; the flat instance has
//! infinite radius.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Dense `d x r` real matrix: points, tangent vectors, and normal vectors all
/// live in the same ambient space.
pub type AmbientMatrix = DMatrix<f64>;

/// Singular values / column norms below this threshold make the projection
/// ill-posed (the input is far outside the proximal tube).
const DEGENERACY_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ManifoldError {
    #[error("matrix is rank deficient (smallest singular value {smin:.3e}); projection target lies outside the proximal tube")]
    RankDeficient { smin: f64 },
    #[error("column {col} has near-zero norm {norm:.3e}; projection target lies outside the proximal tube")]
    ZeroColumn { col: usize, norm: f64 },
    #[error("point is not on the manifold: feasibility error {error:.3e} exceeds tolerance {tol:.3e}")]
    InfeasiblePoint { error: f64, tol: f64 },
    #[error("expected a {expected_rows}x{expected_cols} matrix, got {rows}x{cols}")]
    DimensionMismatch {
        expected_rows: usize,
        expected_cols: usize,
        rows: usize,
        cols: usize,
    },
}

pub type Result<T> = std::result::Result<T, ManifoldError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ManifoldKind {
    Stiefel { d: usize, r: usize },
    Oblique { d: usize, r: usize },
    Sphere { d: usize },
    Euclidean { d: usize, r: usize },
}

impl ManifoldKind {
    /// Ambient shape `(d, r)`. A sphere point is a `d x 1` matrix.
    pub fn dims(&self) -> (usize, usize) {
        match *self {
            ManifoldKind::Stiefel { d, r } | ManifoldKind::Oblique { d, r } => (d, r),
            ManifoldKind::Sphere { d } => (d, 1),
            ManifoldKind::Euclidean { d, r } => (d, r),
        }
    }
}

impl std::fmt::Display for ManifoldKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            ManifoldKind::Stiefel { d, r } => write!(f, "St({d},{r})"),
            ManifoldKind::Oblique { d, r } => write!(f, "Ob({d},{r})"),
            ManifoldKind::Sphere { d } => write!(f, "S({d})"),
            ManifoldKind::Euclidean { d, r } => write!(f, "Eu({d},{r})"),
        }
    }
}

/// Which second-order-accurate map sends `x + u` back to the manifold.
///
/// On the Stiefel manifold the two genuinely differ (Q factor of the thin QR
/// versus the polar factor); on Oblique and the sphere both reduce to column
/// normalization; on the flat instance both are the identity shift.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RetractionScheme {
    Qr,
    Polar,
}

impl std::fmt::Display for RetractionScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RetractionScheme::Qr => write!(f, "qr"),
            RetractionScheme::Polar => write!(f, "polar"),
        }
    }
}

/// A compact submanifold together with its proximal radius `2*gamma` and the
/// membership tolerance. Immutable and cheap to copy.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ManifoldSpec {
    kind: ManifoldKind,
    /// Proximal radius `2*gamma` (infinite for the flat instance).
    proximal_radius: f64,
    feasibility_tol: f64,
}

pub const DEFAULT_FEASIBILITY_TOL: f64 = 1e-10;

impl ManifoldSpec {
    pub fn stiefel(d: usize, r: usize) -> Self {
        assert!(r >= 1 && d >= r, "Stiefel requires d >= r >= 1");
        Self {
            kind: ManifoldKind::Stiefel { d, r },
            proximal_radius: 1.0,
            feasibility_tol: DEFAULT_FEASIBILITY_TOL,
        }
    }

    pub fn oblique(d: usize, r: usize) -> Self {
        assert!(d >= 1 && r >= 1, "Oblique requires d, r >= 1");
        Self {
            kind: ManifoldKind::Oblique { d, r },
            proximal_radius: 1.0,
            feasibility_tol: DEFAULT_FEASIBILITY_TOL,
        }
    }

    pub fn sphere(d: usize) -> Self {
        assert!(d >= 1, "Sphere requires d >= 1");
        Self {
            kind: ManifoldKind::Sphere { d },
            proximal_radius: 1.0,
            feasibility_tol: DEFAULT_FEASIBILITY_TOL,
        }
    }

    pub fn euclidean(d: usize, r: usize) -> Self {
        assert!(d >= 1 && r >= 1, "Euclidean requires d, r >= 1");
        Self {
            kind: ManifoldKind::Euclidean { d, r },
            proximal_radius: f64::INFINITY,
            feasibility_tol: DEFAULT_FEASIBILITY_TOL,
        }
    }

    pub fn from_kind(kind: ManifoldKind) -> Self {
        match kind {
            ManifoldKind::Stiefel { d, r } => Self::stiefel(d, r),
            ManifoldKind::Oblique { d, r } => Self::oblique(d, r),
            ManifoldKind::Sphere { d } => Self::sphere(d),
            ManifoldKind::Euclidean { d, r } => Self::euclidean(d, r),
        }
    }

    pub fn with_feasibility_tol(mut self, tol: f64) -> Self {
        assert!(tol >= 0.0);
        self.feasibility_tol = tol;
        self
    }

    pub fn kind(&self) -> ManifoldKind {
        self.kind
    }

    pub fn dims(&self) -> (usize, usize) {
        self.kind.dims()
    }

    /// Proximal radius `2*gamma`.
    pub fn proximal_radius(&self) -> f64 {
        self.proximal_radius
    }

    /// The `gamma` in the normal inequality and tube bounds (half the radius).
    pub fn gamma(&self) -> f64 {
        self.proximal_radius / 2.0
    }

    pub fn feasibility_tol(&self) -> f64 {
        self.feasibility_tol
    }

    pub fn is_flat(&self) -> bool {
        matches!(self.kind, ManifoldKind::Euclidean { .. })
    }

    fn check_dims(&self, m: &AmbientMatrix) -> Result<()> {
        let (d, r) = self.dims();
        if m.nrows() != d || m.ncols() != r {
            return Err(ManifoldError::DimensionMismatch {
                expected_rows: d,
                expected_cols: r,
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        Ok(())
    }

    /// Deviation from the membership equations: `||x'x - I||_F` on Stiefel,
    /// `||diag(x'x) - 1||_2` on Oblique/sphere, 0 on the flat instance.
    pub fn feasibility_error(&self, x: &AmbientMatrix) -> f64 {
        match self.kind {
            ManifoldKind::Stiefel { .. } => {
                let gram = x.transpose() * x;
                let r = gram.nrows();
                (gram - DMatrix::identity(r, r)).norm()
            }
            ManifoldKind::Oblique { .. } | ManifoldKind::Sphere { .. } => {
                let mut sq = 0.0;
                for j in 0..x.ncols() {
                    let dev = x.column(j).norm_squared() - 1.0;
                    sq += dev * dev;
                }
                sq.sqrt()
            }
            ManifoldKind::Euclidean { .. } => 0.0,
        }
    }

    pub fn is_member(&self, x: &AmbientMatrix) -> bool {
        self.check_dims(x).is_ok() && self.feasibility_error(x) <= self.feasibility_tol
    }

    pub fn check_member(&self, x: &AmbientMatrix) -> Result<()> {
        self.check_dims(x)?;
        let error = self.feasibility_error(x);
        if error > self.feasibility_tol {
            return Err(ManifoldError::InfeasiblePoint {
                error,
                tol: self.feasibility_tol,
            });
        }
        Ok(())
    }

    /// Nearest-point projection onto the manifold.
    ///
    /// Stiefel: the polar factor `U V'` of the thin SVD of `y`; Oblique and
    /// sphere: each column divided by its norm; flat: the identity.
    pub fn project(&self, y: &AmbientMatrix) -> Result<AmbientMatrix> {
        self.check_dims(y)?;
        match self.kind {
            ManifoldKind::Stiefel { .. } => {
                let svd = y.clone().svd(true, true);
                let smin = svd.singular_values.min();
                let smax = svd.singular_values.max();
                if smin <= DEGENERACY_TOL * smax.max(1.0) {
                    return Err(ManifoldError::RankDeficient { smin });
                }
                let u = svd.u.expect("svd with compute_u");
                let v_t = svd.v_t.expect("svd with compute_v");
                Ok(u * v_t)
            }
            ManifoldKind::Oblique { .. } | ManifoldKind::Sphere { .. } => {
                let mut out = y.clone();
                for j in 0..out.ncols() {
                    let norm = out.column(j).norm();
                    if norm <= DEGENERACY_TOL {
                        return Err(ManifoldError::ZeroColumn { col: j, norm });
                    }
                    out.column_mut(j).scale_mut(1.0 / norm);
                }
                Ok(out)
            }
            ManifoldKind::Euclidean { .. } => Ok(y.clone()),
        }
    }

    /// Orthogonal projection of `v` onto the tangent space at `x`.
    pub fn tangent_project(&self, x: &AmbientMatrix, v: &AmbientMatrix) -> Result<AmbientMatrix> {
        self.check_member(x)?;
        self.check_dims(v)?;
        Ok(self.tangent_project_unchecked(x, v))
    }

    /// Same as [`Self::tangent_project`] but skips membership validation;
    /// used in iteration loops where feasibility is maintained by
    /// construction.
    pub fn tangent_project_unchecked(&self, x: &AmbientMatrix, v: &AmbientMatrix) -> AmbientMatrix {
        match self.kind {
            ManifoldKind::Stiefel { .. } => {
                // v - x * sym(x'v)
                let xtv = x.transpose() * v;
                let sym = (&xtv + xtv.transpose()) * 0.5;
                v - x * sym
            }
            ManifoldKind::Oblique { .. } | ManifoldKind::Sphere { .. } => {
                let mut out = v.clone();
                for j in 0..out.ncols() {
                    let xj = x.column(j);
                    let coeff = xj.dot(&v.column(j));
                    let mut col = out.column_mut(j);
                    col.axpy(-coeff, &xj, 1.0);
                }
                out
            }
            ManifoldKind::Euclidean { .. } => v.clone(),
        }
    }

    /// Projection onto the normal space at `x`: the complement of
    /// [`Self::tangent_project`].
    pub fn normal_project(&self, x: &AmbientMatrix, v: &AmbientMatrix) -> Result<AmbientMatrix> {
        let tangent = self.tangent_project(x, v)?;
        Ok(v - tangent)
    }

    /// Retract the tangent vector `u` at `x` back onto the manifold.
    ///
    /// The QR scheme forces the diagonal of `R` positive so the map is a
    /// deterministic function of `(x, u)`.
    pub fn retract(
        &self,
        scheme: RetractionScheme,
        x: &AmbientMatrix,
        u: &AmbientMatrix,
    ) -> Result<AmbientMatrix> {
        self.check_dims(x)?;
        self.check_dims(u)?;
        let moved = x + u;
        match self.kind {
            ManifoldKind::Stiefel { .. } => match scheme {
                RetractionScheme::Qr => qr_orthonormal_factor(moved),
                RetractionScheme::Polar => self.project(&moved),
            },
            ManifoldKind::Oblique { .. } | ManifoldKind::Sphere { .. } => self.project(&moved),
            ManifoldKind::Euclidean { .. } => Ok(moved),
        }
    }

    /// Distance to the manifold, `||y - P(y)||`.
    pub fn distance_to(&self, y: &AmbientMatrix) -> Result<f64> {
        let p = self.project(y)?;
        Ok((y - p).norm())
    }

    /// Seeded random point: projection of an i.i.d. standard Gaussian matrix.
    pub fn random_point<R: Rng>(&self, rng: &mut R) -> AmbientMatrix {
        loop {
            let g = self.random_ambient(rng);
            if let Ok(p) = self.project(&g) {
                return p;
            }
            // rank-deficient Gaussian draw: probability zero, retry anyway
        }
    }

    /// Seeded random ambient matrix with i.i.d. standard normal entries.
    pub fn random_ambient<R: Rng>(&self, rng: &mut R) -> AmbientMatrix {
        let (d, r) = self.dims();
        DMatrix::from_fn(d, r, |_, _| rng.sample(StandardNormal))
    }

    /// Random unit-norm tangent vector at `x`.
    pub fn random_unit_tangent<R: Rng>(&self, x: &AmbientMatrix, rng: &mut R) -> AmbientMatrix {
        loop {
            let g = self.random_ambient(rng);
            let t = self.tangent_project_unchecked(x, &g);
            let norm = t.norm();
            if norm > 1e-8 {
                return t / norm;
            }
        }
    }
}

/// Q factor of the thin QR factorization with the sign convention that the
/// diagonal of R is positive.
fn qr_orthonormal_factor(m: AmbientMatrix) -> Result<AmbientMatrix> {
    let r_cols = m.ncols();
    let qr = m.qr();
    let (mut q, r) = qr.unpack();
    for j in 0..r_cols {
        let diag = r[(j, j)];
        if diag.abs() <= DEGENERACY_TOL {
            return Err(ManifoldError::RankDeficient { smin: diag.abs() });
        }
        if diag < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn mat(rows: usize, cols: usize, data: &[f64]) -> AmbientMatrix {
        DMatrix::from_row_slice(rows, cols, data)
    }

    #[test]
    fn sphere_projection_scales_to_unit() {
        let m = ManifoldSpec::sphere(2);
        let p = m.project(&mat(2, 1, &[2.0, 0.0])).unwrap();
        assert_relative_eq!(p, mat(2, 1, &[1.0, 0.0]), epsilon = 1e-14);
        assert_relative_eq!(m.distance_to(&mat(2, 1, &[2.0, 0.0])).unwrap(), 1.0);
    }

    #[test]
    fn stiefel_projection_of_scaled_orthogonal_matrix() {
        let m = ManifoldSpec::stiefel(2, 2);
        let p = m.project(&mat(2, 2, &[2.0, 0.0, 0.0, 2.0])).unwrap();
        assert_relative_eq!(p, DMatrix::identity(2, 2), epsilon = 1e-13);
    }

    #[test]
    fn oblique_projection_normalizes_columns() {
        let m = ManifoldSpec::oblique(2, 2);
        let y = mat(2, 2, &[3.0, 0.0, 0.0, 0.5]);
        let p = m.project(&y).unwrap();
        assert_relative_eq!(p, DMatrix::identity(2, 2), epsilon = 1e-14);
        // distance oracle: per-column | ||y_j|| - 1 |, stacked
        assert_relative_eq!(m.distance_to(&y).unwrap(), (4.0f64 + 0.25).sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn projection_errors_signal_points_outside_tube() {
        let st = ManifoldSpec::stiefel(3, 2);
        let rank1 = mat(3, 2, &[1.0, 2.0, 1.0, 2.0, 1.0, 2.0]);
        assert!(matches!(
            st.project(&rank1),
            Err(ManifoldError::RankDeficient { .. })
        ));
        let ob = ManifoldSpec::oblique(2, 2);
        let zero_col = mat(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert!(matches!(
            ob.project(&zero_col),
            Err(ManifoldError::ZeroColumn { col: 1, .. })
        ));
    }

    #[test]
    fn tangent_projection_on_circle_is_vertical() {
        let m = ManifoldSpec::stiefel(2, 1);
        let x = mat(2, 1, &[1.0, 0.0]);
        let v = mat(2, 1, &[0.7, -1.3]);
        let t = m.tangent_project(&x, &v).unwrap();
        assert_relative_eq!(t, mat(2, 1, &[0.0, -1.3]), epsilon = 1e-14);
        let n = m.normal_project(&x, &v).unwrap();
        assert_relative_eq!(n, mat(2, 1, &[0.7, 0.0]), epsilon = 1e-14);
    }

    #[test]
    fn oblique_tangent_projection_per_column() {
        let m = ManifoldSpec::oblique(2, 2);
        let x = DMatrix::identity(2, 2);
        let v = mat(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let t = m.tangent_project(&x, &v).unwrap();
        assert_relative_eq!(t, mat(2, 2, &[0.0, 1.0, 1.0, 0.0]), epsilon = 1e-14);
    }

    #[test]
    fn sphere_normal_projection_example() {
        let m = ManifoldSpec::oblique(2, 1);
        let x = mat(2, 1, &[0.0, 1.0]);
        let v = mat(2, 1, &[3.0, 5.0]);
        let n = m.normal_project(&x, &v).unwrap();
        assert_relative_eq!(n, mat(2, 1, &[0.0, 5.0]), epsilon = 1e-14);
    }

    #[test]
    fn euclidean_normal_projection_is_zero() {
        let m = ManifoldSpec::euclidean(3, 2);
        let x = mat(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let v = mat(3, 2, &[1.0, -1.0, 0.5, 2.0, -3.0, 1.0]);
        assert_eq!(m.normal_project(&x, &v).unwrap().norm(), 0.0);
    }

    #[test]
    fn tangent_projection_rejects_infeasible_point() {
        let m = ManifoldSpec::sphere(3);
        let x = mat(3, 1, &[2.0, 0.0, 0.0]);
        let v = mat(3, 1, &[1.0, 1.0, 1.0]);
        assert!(matches!(
            m.tangent_project(&x, &v),
            Err(ManifoldError::InfeasiblePoint { .. })
        ));
    }

    #[test]
    fn retract_zero_returns_base_point() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for m in [
            ManifoldSpec::stiefel(5, 2),
            ManifoldSpec::oblique(4, 3),
            ManifoldSpec::sphere(6),
            ManifoldSpec::euclidean(3, 2),
        ] {
            let x = m.random_point(&mut rng);
            let (d, r) = m.dims();
            let zero = DMatrix::zeros(d, r);
            for scheme in [RetractionScheme::Qr, RetractionScheme::Polar] {
                let y = m.retract(scheme, &x, &zero).unwrap();
                assert!((y - &x).norm() <= 1e-13, "{m:?} {scheme:?}");
            }
        }
    }

    #[test]
    fn qr_retraction_on_circle_is_normalization() {
        let m = ManifoldSpec::stiefel(2, 1);
        let x = mat(2, 1, &[1.0, 0.0]);
        for s in [0.3, -0.7, 1.9] {
            let u = mat(2, 1, &[0.0, s]);
            let y = m.retract(RetractionScheme::Qr, &x, &u).unwrap();
            let scale = (1.0 + s * s).sqrt();
            assert_relative_eq!(y, mat(2, 1, &[1.0 / scale, s / scale]), epsilon = 1e-14);
        }
    }

    /// Second-order retraction bound: fit the constant on one sample set,
    /// then check 1000 fresh draws against it.
    #[test]
    fn retraction_second_order_bound_on_stiefel() {
        let m = ManifoldSpec::stiefel(3, 2);
        let fitted = {
            let mut rng = ChaCha12Rng::seed_from_u64(11);
            let mut worst: f64 = 0.0;
            for _ in 0..500 {
                let x = m.random_point(&mut rng);
                let scale = 0.1 * rng.random::<f64>().max(1e-3);
                let u = m.random_unit_tangent(&x, &mut rng) * scale;
                let y = m.retract(RetractionScheme::Qr, &x, &u).unwrap();
                worst = worst.max((y - &x - &u).norm() / (scale * scale));
            }
            worst * 1.5
        };
        assert!(fitted.is_finite() && fitted > 0.0);
        let mut rng = ChaCha12Rng::seed_from_u64(12);
        for _ in 0..1000 {
            let x = m.random_point(&mut rng);
            let scale = 0.1 * rng.random::<f64>().max(1e-3);
            let u = m.random_unit_tangent(&x, &mut rng) * scale;
            let y = m.retract(RetractionScheme::Qr, &x, &u).unwrap();
            assert!((y - &x - &u).norm() <= fitted * scale * scale + 1e-14);
        }
    }

    #[test]
    fn retraction_schemes_agree_to_first_order() {
        let m = ManifoldSpec::stiefel(6, 3);
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let x = m.random_point(&mut rng);
        let u = m.random_unit_tangent(&x, &mut rng);
        let ratios: Vec<f64> = [1e-1, 1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&s| {
                let su = &u * s;
                let a = m.retract(RetractionScheme::Qr, &x, &su).unwrap();
                let b = m.retract(RetractionScheme::Polar, &x, &su).unwrap();
                (a - b).norm() / s
            })
            .collect();
        // the gap is second order, so gap/s decays linearly in s
        for pair in ratios.windows(2) {
            assert!(pair[1] < pair[0]);
        }
        assert!(ratios[3] <= 1e-2 * ratios[0] + 1e-12);
        assert!(ratios[3] <= 1e-3);
    }

    #[test]
    fn projection_is_lipschitz_within_tube() {
        // 2/(2-beta) bound with beta = 1 on the gamma-tube
        for m in [ManifoldSpec::stiefel(4, 2), ManifoldSpec::sphere(5)] {
            let beta = 1.0;
            let radius = beta * m.gamma();
            let mut rng = ChaCha12Rng::seed_from_u64(21);
            for _ in 0..300 {
                let base = m.random_point(&mut rng);
                let off_y = m.random_ambient(&mut rng);
                let off_z = m.random_ambient(&mut rng);
                let y = &base + &off_y * (0.99 * radius * rng.random::<f64>() / off_y.norm());
                let z = &base + &off_z * (0.99 * radius * rng.random::<f64>() / off_z.norm());
                if m.distance_to(&y).unwrap() > radius || m.distance_to(&z).unwrap() > radius {
                    continue;
                }
                let lhs = (m.project(&y).unwrap() - m.project(&z).unwrap()).norm();
                let rhs = 2.0 / (2.0 - beta) * (&y - &z).norm();
                assert!(lhs <= rhs + 1e-10 * rhs.max(1.0));
            }
        }
    }

    #[test]
    fn tangent_normal_split_is_exact_and_orthogonal() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        for m in [
            ManifoldSpec::stiefel(5, 3),
            ManifoldSpec::oblique(4, 2),
            ManifoldSpec::sphere(7),
            ManifoldSpec::euclidean(4, 2),
        ] {
            for _ in 0..50 {
                let x = m.random_point(&mut rng);
                let v = m.random_ambient(&mut rng);
                let t = m.tangent_project(&x, &v).unwrap();
                let n = m.normal_project(&x, &v).unwrap();
                assert!((&t + &n - &v).norm() <= 1e-13 * v.norm().max(1.0));
                assert!(t.dot(&n).abs() <= 1e-12 * v.norm_squared().max(1.0));
                // idempotence
                let tt = m.tangent_project(&x, &t).unwrap();
                assert!((tt - &t).norm() <= 1e-12 * v.norm().max(1.0));
            }
        }
    }

    #[test]
    fn normal_inequality_holds_on_samples() {
        // <v, y-x> <= ||v||/(4 gamma) ||y-x||^2 for x, y on M, v normal at x
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        for m in [ManifoldSpec::stiefel(4, 2), ManifoldSpec::sphere(6)] {
            let gamma = m.gamma();
            for _ in 0..300 {
                let x = m.random_point(&mut rng);
                let y = m.random_point(&mut rng);
                let v = m.normal_project(&x, &m.random_ambient(&mut rng)).unwrap();
                let lhs = v.dot(&(&y - &x));
                let rhs = v.norm() / (4.0 * gamma) * (&y - &x).norm_squared();
                assert!(lhs <= rhs + 1e-10 * rhs.abs().max(1.0));
            }
        }
    }
}
