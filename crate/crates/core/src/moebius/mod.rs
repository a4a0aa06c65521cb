//! The orientation-preserving Möbius group of S².
//!
//! Every element is stored as `x ↦ R·φ_{ξ,λ}(x)` where `φ_{ξ,λ}` conjugates
//! the dilation `p ↦ λp` by the stereographic projection `σ_ξ`. The
//! projection is taken from the antipode `−ξ` onto the affine tangent plane
//! at `ξ`, so the great circle orthogonal to `ξ` lands on the circle of
//! radius 2. For `λ < 1` the map contracts the sphere towards `ξ`.
//!
//! The representation is not unique: `φ_{ξ,λ} = φ_{−ξ,1/λ}`, and `ξ` is
//! arbitrary when `λ = 1`. Use [`MoebiusTransform::max_deviation`] to compare
//! transforms as maps.

mod centering;

pub use centering::{
    center_map, center_map_with, homotopy_f, homotopy_f_weighted, CenteringOptions, CenteringResult,
};

use std::sync::Arc;

use nalgebra::{Matrix3, Matrix4, Vector2, Vector3, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::maps::SphereMap;
use crate::sphere::SphereGrid;

/// Tolerance for the rotation and unit-vector invariants.
pub const PARAMETER_TOLERANCE: f64 = 1e-12;
/// Largest admissible composition certificate.
pub const COMPOSITION_TOLERANCE: f64 = 1e-8;
/// Distance to `−ξ` below which stereographic projection fails.
pub const POLE_TOLERANCE: f64 = 1e-10;

/// Dilation range accepted by [`random_moebius`].
pub const RANDOM_LAMBDA_BOUNDS: (f64, f64) = (0.1, 10.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoebiusTransform {
    rotation: Matrix3<f64>,
    xi: Vector3<f64>,
    lambda: f64,
}

/// Deterministic orthonormal basis of the tangent plane at `xi`.
pub fn tangent_basis(xi: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let a = if xi[0].abs() < 0.9 {
        Vector3::x()
    } else {
        Vector3::y()
    };
    let t1 = (a - xi * a.dot(xi)).normalize();
    let t2 = xi.cross(&t1);
    (t1, t2)
}

/// Stereographic coordinates of `x` in the tangent plane at `xi`, relative
/// to [`tangent_basis`].
pub fn stereo(xi: &Vector3<f64>, x: &Vector3<f64>) -> Result<Vector2<f64>> {
    let distance = (x + xi).norm();
    if distance < POLE_TOLERANCE {
        return Err(Error::ProjectionPole { distance });
    }
    let (t1, t2) = tangent_basis(xi);
    let scale = 2.0 / (1.0 + x.dot(xi));
    Ok(Vector2::new(scale * x.dot(&t1), scale * x.dot(&t2)))
}

/// Inverse of [`stereo`].
pub fn stereo_inv(xi: &Vector3<f64>, p: &Vector2<f64>) -> Vector3<f64> {
    let (t1, t2) = tangent_basis(xi);
    let r2 = p.norm_squared();
    let planar = t1 * p[0] + t2 * p[1];
    (planar * 4.0 + xi * (4.0 - r2)) / (4.0 + r2)
}

/// `φ_{ξ,λ}(x)` in closed form; agrees with `stereo_inv ∘ (λ·) ∘ stereo` and
/// stays regular at `−ξ`.
pub fn dilate(xi: &Vector3<f64>, lambda: f64, x: &Vector3<f64>) -> Vector3<f64> {
    if lambda == 1.0 {
        return *x;
    }
    let s = x.dot(xi);
    let v = x - xi * s;
    let l2 = lambda * lambda;
    let (plus, minus) = (1.0 + s, 1.0 - s);
    let den = plus + l2 * minus;
    ((v * (2.0 * lambda) + xi * (plus - l2 * minus)) / den).normalize()
}

/// Area Jacobian of `φ_{ξ,λ}` at `x`.
pub fn dilation_jacobian(xi: &Vector3<f64>, lambda: f64, x: &Vector3<f64>) -> f64 {
    let s = x.dot(xi);
    let den = (1.0 + s) + lambda * lambda * (1.0 - s);
    4.0 * lambda * lambda / (den * den)
}

fn check_rotation(r: &Matrix3<f64>) -> Result<()> {
    let ortho = (r.transpose() * r - Matrix3::identity()).norm();
    let det = r.determinant();
    if !(ortho <= PARAMETER_TOLERANCE) || !((det - 1.0).abs() <= PARAMETER_TOLERANCE) {
        return Err(Error::InvalidArgument(format!(
            "not a rotation: |RᵀR − I| = {ortho:e}, det = {det}"
        )));
    }
    Ok(())
}

/// Nearest rotation in the Frobenius norm.
pub(crate) fn nearest_rotation(m: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = m.svd(true, true);
    let (u, v_t) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
    let mut d = Matrix3::identity();
    if (u * v_t).determinant() < 0.0 {
        d[(2, 2)] = -1.0;
    }
    u * d * v_t
}

fn boost(xi: &Vector3<f64>, lambda: f64) -> Matrix4<f64> {
    let eta = -lambda.ln();
    let (ch, sh) = (eta.cosh(), eta.sinh());
    let mut m = Matrix4::identity();
    m[(0, 0)] = ch;
    for i in 0..3 {
        m[(0, i + 1)] = sh * xi[i];
        m[(i + 1, 0)] = sh * xi[i];
        for j in 0..3 {
            m[(i + 1, j + 1)] += (ch - 1.0) * xi[i] * xi[j];
        }
    }
    m
}

/// Fibonacci points used as composition certificate samples.
fn certificate_points(count: usize) -> Vec<Vector3<f64>> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / count as f64;
            let r = (1.0 - z * z).sqrt();
            let a = golden * i as f64;
            Vector3::new(r * a.cos(), r * a.sin(), z)
        })
        .collect()
}

impl MoebiusTransform {
    pub fn new(rotation: Matrix3<f64>, xi: Vector3<f64>, lambda: f64) -> Result<Self> {
        check_rotation(&rotation)?;
        if !((xi.norm() - 1.0).abs() <= PARAMETER_TOLERANCE) {
            return Err(Error::InvalidArgument(format!(
                "|ξ| = {} is not 1",
                xi.norm()
            )));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "λ = {lambda} must be positive"
            )));
        }
        Ok(Self {
            rotation,
            xi,
            lambda,
        })
    }

    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            xi: Vector3::z(),
            lambda: 1.0,
        }
    }

    /// Pure dilation `φ_{ξ,λ}`; `xi` is normalized.
    pub fn dilation(xi: Vector3<f64>, lambda: f64) -> Result<Self> {
        let n = xi.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::InvalidArgument("ξ must be nonzero".into()));
        }
        Self::new(Matrix3::identity(), xi / n, lambda)
    }

    pub fn from_rotation(rotation: Matrix3<f64>) -> Result<Self> {
        Self::new(rotation, Vector3::z(), 1.0)
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn xi(&self) -> &Vector3<f64> {
        &self.xi
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn is_rotation(&self) -> bool {
        self.lambda == 1.0
    }

    /// The dilation factor `φ_{ξ,λ}` without the rotation.
    pub fn dilation_part(&self) -> Self {
        Self {
            rotation: Matrix3::identity(),
            ..*self
        }
    }

    pub fn apply(&self, x: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * dilate(&self.xi, self.lambda, x)
    }

    /// Same transform with `λ ≤ 1` (swapping `ξ ↦ −ξ` if needed).
    pub fn canonical(&self) -> Self {
        if self.lambda > 1.0 {
            Self {
                rotation: self.rotation,
                xi: -self.xi,
                lambda: 1.0 / self.lambda,
            }
        } else {
            *self
        }
    }

    /// `(R φ_{ξ,λ})⁻¹ = Rᵀ φ_{Rξ,1/λ}`.
    pub fn inverse(&self) -> Self {
        Self {
            rotation: self.rotation.transpose(),
            xi: self.rotation * self.xi,
            lambda: 1.0 / self.lambda,
        }
    }

    /// Action on the light cone: `x ↦ (1, x)` followed by this 4×4 matrix
    /// and projective normalization reproduces [`apply`](Self::apply).
    pub fn lorentz(&self) -> Matrix4<f64> {
        let mut rot = Matrix4::identity();
        rot.fixed_view_mut::<3, 3>(1, 1).copy_from(&self.rotation);
        rot * boost(&self.xi, self.lambda)
    }

    fn from_lorentz(l: &Matrix4<f64>) -> Result<Self> {
        let row = Vector3::new(l[(0, 1)], l[(0, 2)], l[(0, 3)]);
        let sh = row.norm();
        if !(sh.is_finite()) {
            return Err(Error::Representation {
                residual: f64::INFINITY,
            });
        }
        if sh < 1e-15 {
            let spatial: Matrix3<f64> = l.fixed_view::<3, 3>(1, 1).into_owned();
            return Ok(Self {
                rotation: nearest_rotation(&spatial),
                xi: Vector3::z(),
                lambda: 1.0,
            });
        }
        let xi = row / sh;
        let lambda = (-sh.asinh()).exp();
        let unboosted = l * boost(&xi, 1.0 / lambda);
        let spatial: Matrix3<f64> = unboosted.fixed_view::<3, 3>(1, 1).into_owned();
        Ok(Self {
            rotation: nearest_rotation(&spatial),
            xi,
            lambda,
        })
    }

    /// `self ∘ other`.
    ///
    /// Rotation factors are absorbed exactly. Otherwise the parameters are
    /// recovered from the product of the light-cone matrices, and the result
    /// is certified against the two-step evaluation on sample points.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.is_rotation() {
            return Self::new(self.rotation * other.rotation, other.xi, other.lambda).or_else(
                |_| {
                    Ok(Self {
                        rotation: nearest_rotation(&(self.rotation * other.rotation)),
                        ..*other
                    })
                },
            );
        }
        if other.is_rotation() {
            let rotation = nearest_rotation(&(self.rotation * other.rotation));
            let xi = (other.rotation.transpose() * self.xi).normalize();
            return Ok(Self {
                rotation,
                xi,
                lambda: self.lambda,
            });
        }
        let candidate = Self::from_lorentz(&(self.lorentz() * other.lorentz()))?;
        let residual = certificate_points(64)
            .iter()
            .chain([self.xi, -self.xi, other.xi, -other.xi].iter())
            .map(|x| (candidate.apply(x) - self.apply(&other.apply(x))).norm())
            .fold(0.0, f64::max);
        if !(residual <= COMPOSITION_TOLERANCE) {
            return Err(Error::Representation { residual });
        }
        Ok(candidate)
    }

    /// Largest pointwise distance between the two transforms on sample points.
    pub fn max_deviation(&self, other: &Self) -> f64 {
        certificate_points(200)
            .iter()
            .chain([self.xi, -self.xi, other.xi, -other.xi].iter())
            .map(|x| (self.apply(x) - other.apply(x)).norm())
            .fold(0.0, f64::max)
    }

    /// Samples the transform on a grid.
    pub fn as_map(&self, grid: &Arc<SphereGrid>) -> SphereMap {
        let values = grid.nodes().iter().map(|x| self.apply(x)).collect();
        SphereMap::from_unit_values(grid.clone(), values)
    }

    /// 13 numbers: rotation (row-major), ξ, λ.
    pub fn to_array(&self) -> [f64; 13] {
        let r = &self.rotation;
        [
            r[(0, 0)],
            r[(0, 1)],
            r[(0, 2)],
            r[(1, 0)],
            r[(1, 1)],
            r[(1, 2)],
            r[(2, 0)],
            r[(2, 1)],
            r[(2, 2)],
            self.xi[0],
            self.xi[1],
            self.xi[2],
            self.lambda,
        ]
    }

    pub fn from_array(a: &[f64; 13]) -> Result<Self> {
        let rotation = Matrix3::new(a[0], a[1], a[2], a[3], a[4], a[5], a[6], a[7], a[8]);
        Self::new(rotation, Vector3::new(a[9], a[10], a[11]), a[12])
    }

    /// Single-line text form: the 13 numbers of [`to_array`](Self::to_array),
    /// space separated, 17 significant digits.
    pub fn to_line(&self) -> String {
        self.to_array()
            .iter()
            .map(|v| format!("{v:.16e}"))
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn from_line(line: &str) -> Result<Self> {
        let mut a = [0.0; 13];
        let mut tokens = line.split_whitespace();
        for (i, slot) in a.iter_mut().enumerate() {
            let tok = tokens.next().ok_or_else(|| Error::Parse {
                line: 1,
                reason: format!("expected 13 numbers, found {i}"),
            })?;
            *slot = tok.parse().map_err(|e| Error::Parse {
                line: 1,
                reason: format!("{tok:?}: {e}"),
            })?;
        }
        if tokens.next().is_some() {
            return Err(Error::Parse {
                line: 1,
                reason: "more than 13 numbers".into(),
            });
        }
        Self::from_array(&a)
    }
}

impl serde::Serialize for MoebiusTransform {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_array().serialize(s)
    }
}

impl<'de> serde::Deserialize<'de> for MoebiusTransform {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let a = <[f64; 13]>::deserialize(d)?;
        Self::from_array(&a).map_err(serde::de::Error::custom)
    }
}

fn gaussian_unit<const N: usize>(rng: &mut ChaCha8Rng) -> [f64; N] {
    loop {
        let mut v = [0.0; N];
        for x in v.iter_mut() {
            *x = rng.sample(StandardNormal);
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-6 {
            return v.map(|x| x / n);
        }
    }
}

/// Haar-random rotation from a seeded generator.
pub fn random_rotation(rng: &mut ChaCha8Rng) -> Matrix3<f64> {
    let [w, x, y, z] = gaussian_unit::<4>(rng);
    let q = nalgebra::UnitQuaternion::from_quaternion(nalgebra::Quaternion::new(w, x, y, z));
    nearest_rotation(q.to_rotation_matrix().matrix())
}

/// Uniform point on S².
pub fn random_unit_vector(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    let [x, y, z] = gaussian_unit::<3>(rng);
    Vector3::new(x, y, z).normalize()
}

/// Uniform rotation, uniform `ξ`, log-uniform `λ` in `lambda_range`.
pub fn random_moebius(seed: u64, lambda_range: (f64, f64)) -> Result<MoebiusTransform> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_moebius_from(&mut rng, lambda_range)
}

pub fn random_moebius_from(
    rng: &mut ChaCha8Rng,
    lambda_range: (f64, f64),
) -> Result<MoebiusTransform> {
    let (lo, hi) = lambda_range;
    let (min, max) = RANDOM_LAMBDA_BOUNDS;
    if !(lo >= min * (1.0 - 1e-12) && hi <= max * (1.0 + 1e-12) && lo <= hi) {
        return Err(Error::InvalidArgument(format!(
            "λ range [{lo}, {hi}] must lie inside [{min}, {max}]"
        )));
    }
    let rotation = random_rotation(rng);
    let xi = random_unit_vector(rng);
    let u: f64 = rng.random();
    let lambda = if lo == hi {
        lo
    } else {
        (lo.ln() + u * (hi.ln() - lo.ln())).exp()
    };
    MoebiusTransform::new(rotation, xi, lambda)
}

/// 4-vector helper for tests of the light-cone action.
pub fn lift(x: &Vector3<f64>) -> Vector4<f64> {
    Vector4::new(1.0, x[0], x[1], x[2])
}
