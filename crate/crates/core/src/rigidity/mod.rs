//! The linearized rigidity pipeline around the identity.
//!
//! After centering, a map `ũ` is split into its first spherical-harmonic
//! part `A x` and the remainder. The functions here compute `A`, its polar
//! factors, the rescaled remainder `w̃ = A⁻¹(ũ − A x)`, the quadratic and
//! cubic terms of the degree expansion, and the explicit constants of the
//! resulting bound. [`analyze`] chains them into a [`RigidityReport`].

mod optimize;
mod polar;
mod report;

pub use optimize::{best_moebius, best_moebius_with, SearchOptions};
pub use polar::{polar_decompose, PolarData};
pub use report::{
    analyze, analyze_signed, analyze_with, AnalyzeOptions, ReportStatus, RigidityReport,
};

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::maps::{tangent_projector, SphereMap};
use crate::sphere::{ShExpansion, SphereGrid, VectorField};

/// Default closeness radius θ.
pub const DEFAULT_THETA: f64 = 0.1;
/// Bound on `|⨍u|` for [`linear_coefficient`].
pub const CENTERED_TOLERANCE: f64 = 1e-6;
/// Upper bound on `|A⁻¹|²` (Frobenius) inside the linearized regime.
pub const MAX_INVERSE_NORM_SQ: f64 = 4.0;

/// `A_ij = 3⨍ u_i x_j`, the degree-one coefficient matrix of a centered map.
pub fn linear_coefficient(u: &SphereMap) -> Result<Matrix3<f64>> {
    let mean = u.mean();
    if mean.norm() > CENTERED_TOLERANCE {
        return Err(Error::InvalidArgument(format!(
            "map is not centered: |⨍u| = {:e}",
            mean.norm()
        )));
    }
    Ok(moment_matrix(u.grid(), u.values()))
}

fn moment_matrix(grid: &SphereGrid, values: &[Vector3<f64>]) -> Matrix3<f64> {
    let mut a = Matrix3::zeros();
    for i in 0..3 {
        for j in 0..3 {
            a[(i, j)] = 3.0 * grid.integrate(|n, x| values[n][i] * x[j]);
        }
    }
    a
}

/// `A` read off the degree-one spherical-harmonic coefficients.
pub fn linear_coefficient_spectral(u: &SphereMap) -> Result<Matrix3<f64>> {
    let exp: &ShExpansion = u.expansion()?;
    let sqrt3 = 3f64.sqrt();
    // x₁ ↔ (1, +1), x₂ ↔ (1, −1), x₃ ↔ (1, 0)
    let orders = [1i64, -1, 0];
    let mut a = Matrix3::zeros();
    for i in 0..3 {
        for (j, m) in orders.iter().enumerate() {
            a[(i, j)] = sqrt3 * exp.coefficient(i, 1, *m);
        }
    }
    Ok(a)
}

/// Checks `det A > 0` and `|A⁻¹|² ≤ 4`; returns `A⁻¹`.
pub fn regime_inverse(a: &Matrix3<f64>) -> Result<Matrix3<f64>> {
    let det = a.determinant();
    if !(det > 0.0) {
        return Err(Error::OutOfRegime(format!("det A = {det} is not positive")));
    }
    let inv = a
        .try_inverse()
        .ok_or_else(|| Error::OutOfRegime("A is singular".into()))?;
    let norm_sq = inv.norm_squared();
    if norm_sq > MAX_INVERSE_NORM_SQ {
        return Err(Error::OutOfRegime(format!(
            "|A⁻¹|² = {norm_sq} exceeds {MAX_INVERSE_NORM_SQ}"
        )));
    }
    Ok(inv)
}

/// `w̃(x) = A⁻¹(ũ(x) − A x)`; an ℝ³-valued field, not unit length.
pub fn w_field(u: &SphereMap, a: &Matrix3<f64>) -> Result<VectorField> {
    let inv = regime_inverse(a)?;
    let values = u
        .values()
        .iter()
        .zip(u.grid().nodes())
        .map(|(v, x)| inv * v - x)
        .collect();
    VectorField::new(u.grid().clone(), values)
}

/// Values and tangential Jacobians of a field, computed once.
struct Differentiated<'a> {
    grid: &'a SphereGrid,
    values: &'a [Vector3<f64>],
    grads: Vec<Matrix3<f64>>,
}

impl<'a> Differentiated<'a> {
    fn new(w: &'a VectorField) -> Result<Self> {
        Ok(Self {
            grid: w.grid(),
            values: w.values(),
            grads: w.gradient()?,
        })
    }

    fn dirichlet(&self) -> f64 {
        self.grid.integrate(|n, _| self.grads[n].norm_squared())
    }

    fn qv3(&self) -> f64 {
        1.5 * self.grid.integrate(|n, x| {
            let g = &self.grads[n];
            let v = x * g.trace() - g.transpose() * x;
            self.values[n].dot(&v)
        })
    }

    fn cubic(&self) -> f64 {
        let frames = self.grid.frames();
        self.grid.integrate(|n, _| {
            let [t1, t2] = &frames[n];
            let g = &self.grads[n];
            self.values[n].dot(&(g * t1).cross(&(g * t2)))
        })
    }
}

/// `Q_{V₃}(w) = (3/2)⨍⟨w, (div w) x − Σⱼ xⱼ ∇wʲ⟩`.
pub fn qv3(w: &VectorField) -> Result<f64> {
    Ok(Differentiated::new(w)?.qv3())
}

/// `⨍⟨w, ∂_{τ₁}w × ∂_{τ₂}w⟩`.
pub fn cubic_term(w: &VectorField) -> Result<f64> {
    Ok(Differentiated::new(w)?.cubic())
}

/// `(|⨍⟨w, ∂₁w × ∂₂w⟩|, (½⨍|∇w|²)^{3/2})`; the first never exceeds the second.
pub fn wente_check(w: &VectorField) -> Result<(f64, f64)> {
    let d = Differentiated::new(w)?;
    Ok((d.cubic().abs(), (0.5 * d.dirichlet()).powf(1.5)))
}

/// Terms of the degree expansion for a centered map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegreeExpansion {
    pub det_a: f64,
    pub w_norm_sq: f64,
    pub qv3: f64,
    pub cubic: f64,
    /// `|det A (1 + Q_{V₃} + cubic) − 1|`.
    pub residual: f64,
}

pub fn degree_expansion(u: &SphereMap, a: &Matrix3<f64>) -> Result<DegreeExpansion> {
    let w = w_field(u, a)?;
    let d = Differentiated::new(&w)?;
    let (q, c) = (d.qv3(), d.cubic());
    let det_a = a.determinant();
    Ok(DegreeExpansion {
        det_a,
        w_norm_sq: d.dirichlet(),
        qv3: q,
        cubic: c,
        residual: (det_a * (1.0 + q + c) - 1.0).abs(),
    })
}

/// `|det A (1 + Q_{V₃}(w̃) + ⨍⟨w̃, ∂w̃ × ∂w̃⟩) − 1|`.
pub fn degree_identity_residual(u: &SphereMap, a: &Matrix3<f64>) -> Result<f64> {
    Ok(degree_expansion(u, a)?.residual)
}

/// `(⨍|∇ũ − A P_T|², 3 D(ũ))`.
pub fn poincare_gap_check(u: &SphereMap, a: &Matrix3<f64>) -> Result<(f64, f64)> {
    Ok((distance_to_linear(u, a)?, 3.0 * u.deficit()?))
}

/// `⨍|∇u − M P_T|²` for a constant matrix `M`.
pub fn distance_to_linear(u: &SphereMap, m: &Matrix3<f64>) -> Result<f64> {
    let g = u.gradient()?;
    Ok(u.grid()
        .integrate(|n, x| (g[n] - m * tangent_projector(x)).norm_squared()))
}

/// Explicit constants of the linearized bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constants {
    pub theta: f64,
    /// Bound `dist²(A, SO(3)) ≤ c₁ D(u)`.
    pub c1: f64,
    /// Final constant `c = 6 + (2/3) c₁`.
    pub c: f64,
}

/// Largest θ with `½ − θ/(3√2) ≥ ¼`.
pub fn max_theta() -> f64 {
    3.0 * std::f64::consts::SQRT_2 / 4.0
}

/// `c₁ = 6(1 + ¾(1+θ²) + (18 + 4√(27(1+θ²)))/√2)` and `c = 6 + ⅔c₁`.
pub fn explicit_constants(theta: f64) -> Result<Constants> {
    let sqrt2 = std::f64::consts::SQRT_2;
    if !(theta >= 0.0) || 0.5 - theta / (3.0 * sqrt2) < 0.25 {
        return Err(Error::InvalidArgument(format!(
            "θ = {theta} violates ½ − θ/(3√2) ≥ ¼ (0 ≤ θ ≤ {})",
            max_theta()
        )));
    }
    let t2 = 1.0 + theta * theta;
    let c1 = 6.0 * (1.0 + 0.75 * t2 + (18.0 + 4.0 * (27.0 * t2).sqrt()) / sqrt2);
    Ok(Constants {
        theta,
        c1,
        c: 6.0 + 2.0 / 3.0 * c1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::SphereGrid;

    #[test]
    fn constants_at_zero() {
        let k = explicit_constants(0.0).unwrap();
        assert!((k.c1 - 175.05).abs() < 5e-3, "{}", k.c1);
        assert!((k.c - 122.70).abs() < 5e-3, "{}", k.c);
        assert_eq!(k.c, 6.0 + 2.0 / 3.0 * k.c1);
    }

    #[test]
    fn theta_range() {
        assert!(explicit_constants(max_theta()).is_ok());
        assert!(explicit_constants(3.0 * std::f64::consts::SQRT_2).is_err());
        assert!(explicit_constants(-0.1).is_err());
        assert!(explicit_constants(f64::NAN).is_err());
    }

    #[test]
    fn identity_has_trivial_linearization() {
        let grid = SphereGrid::with_resolution(16).unwrap();
        let u = SphereMap::identity(grid);
        let a = linear_coefficient(&u).unwrap();
        assert!((a - Matrix3::identity()).norm() < 1e-12);
        let w = w_field(&u, &a).unwrap();
        assert!(w.values().iter().all(|v| v.norm() < 1e-12));
        assert!(degree_identity_residual(&u, &a).unwrap() < 1e-12);
        let (lhs, bound) = poincare_gap_check(&u, &a).unwrap();
        assert!(lhs < 1e-20 && bound.abs() < 1e-12);
    }

    #[test]
    fn uncentered_map_rejected() {
        let grid = SphereGrid::with_resolution(16).unwrap();
        let u = SphereMap::from_fn(grid, |x| x + Vector3::new(0.0, 0.0, 0.3)).unwrap();
        assert!(linear_coefficient(&u).is_err());
    }

    #[test]
    fn regime_checks() {
        assert!(regime_inverse(&Matrix3::identity()).is_ok());
        assert!(regime_inverse(&(Matrix3::identity() * 0.5)).is_err());
        assert!(regime_inverse(&Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0))).is_err());
    }
}
