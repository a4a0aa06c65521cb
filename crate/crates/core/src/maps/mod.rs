//! Maps `S² → S²` sampled on a grid, and their integral functionals.

mod file;

pub use file::{MapFile, MAX_FILE_NODES};

use std::sync::{Arc, OnceLock};

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::sphere::{ShExpansion, SphereGrid, VectorField};

/// Norm tolerance for map values.
pub const UNIT_TOLERANCE: f64 = 1e-12;
/// Smallest raw vector accepted by [`normalize_to_sphere`].
pub const MIN_RAW_NORM: f64 = 1e-8;
/// Maximal distance of the computed degree from ±1 for a map to be admissible.
pub const DEGREE_TOLERANCE: f64 = 1e-3;

/// A unit 3-vector per grid node.
///
/// The spectral expansion and the tangential Jacobian are filled lazily,
/// at most once.
#[derive(Debug)]
pub struct SphereMap {
    grid: Arc<SphereGrid>,
    values: Vec<Vector3<f64>>,
    expansion: OnceLock<ShExpansion>,
    gradient: OnceLock<Vec<Matrix3<f64>>>,
}

impl Clone for SphereMap {
    fn clone(&self) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.clone(),
            expansion: self.expansion.clone(),
            gradient: self.gradient.clone(),
        }
    }
}

impl SphereMap {
    /// Wraps unit vectors; fails if any value is off the sphere by more than
    /// [`UNIT_TOLERANCE`].
    pub fn new(grid: Arc<SphereGrid>, values: Vec<Vector3<f64>>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "{} values for a grid with {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some((node, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !((v.norm() - 1.0).abs() <= UNIT_TOLERANCE))
        {
            return Err(Error::InvalidArgument(format!(
                "value at node {node} has norm {} (not a unit vector)",
                v.norm()
            )));
        }
        Ok(Self::from_unit_values(grid, values))
    }

    pub(crate) fn from_unit_values(grid: Arc<SphereGrid>, values: Vec<Vector3<f64>>) -> Self {
        Self {
            grid,
            values,
            expansion: OnceLock::new(),
            gradient: OnceLock::new(),
        }
    }

    pub fn identity(grid: Arc<SphereGrid>) -> Self {
        let values = grid.nodes().to_vec();
        Self::from_unit_values(grid, values)
    }

    /// Samples `f` at every node and projects radially onto the sphere.
    pub fn from_fn<F: Fn(&Vector3<f64>) -> Vector3<f64>>(
        grid: Arc<SphereGrid>,
        f: F,
    ) -> Result<Self> {
        normalize_to_sphere(&VectorField::from_fn(grid, f))
    }

    pub fn grid(&self) -> &Arc<SphereGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[Vector3<f64>] {
        &self.values
    }

    pub fn as_field(&self) -> VectorField {
        VectorField::new(self.grid.clone(), self.values.clone())
            .expect("length checked at construction")
    }

    /// Spectral coefficients at the grid's maximal degree.
    pub fn expansion(&self) -> Result<&ShExpansion> {
        if let Some(e) = self.expansion.get() {
            return Ok(e);
        }
        let e = self.as_field().analyze(self.grid.max_degree())?;
        let _ = self.expansion.set(e);
        Ok(self.expansion.get().expect("just set"))
    }

    /// Tangential Jacobian per node; row `i` is `∇_{S²} u_i`.
    pub fn gradient(&self) -> Result<&[Matrix3<f64>]> {
        if let Some(g) = self.gradient.get() {
            return Ok(g);
        }
        let grads = self.expansion()?.gradients(&self.grid)?;
        let g = crate::sphere::sh::stack_gradients(&grads)?;
        let _ = self.gradient.set(g);
        Ok(self.gradient.get().expect("just set"))
    }

    pub fn mean(&self) -> Vector3<f64> {
        self.grid.mean_of_vectors(&self.values)
    }

    /// `⨍⟨u, ∂_{τ₁}u × ∂_{τ₂}u⟩`, reported unrounded.
    pub fn degree(&self) -> Result<f64> {
        let g = self.gradient()?;
        let frames = self.grid.frames();
        Ok(self.grid.integrate(|n, _| {
            let [t1, t2] = &frames[n];
            self.values[n].dot(&(g[n] * t1).cross(&(g[n] * t2)))
        }))
    }

    /// `½⨍|∇u|²` with the Frobenius norm.
    pub fn dirichlet_energy(&self) -> Result<f64> {
        let g = self.gradient()?;
        Ok(0.5 * self.grid.integrate(|n, _| g[n].norm_squared()))
    }

    /// Conformal deficit `½⨍|∇u|² − 1`.
    pub fn deficit(&self) -> Result<f64> {
        Ok(self.dirichlet_energy()? - 1.0)
    }

    /// Post-composition with the reflection `(x₁, x₂, x₃) ↦ (x₁, x₂, −x₃)`.
    pub fn reflect(&self) -> Self {
        let values = self
            .values
            .iter()
            .map(|v| Vector3::new(v[0], v[1], -v[2]))
            .collect();
        Self::from_unit_values(self.grid.clone(), values)
    }

    /// Post-composition with a rotation (or any orthogonal matrix).
    pub fn rotate(&self, rotation: &Matrix3<f64>) -> Self {
        let values = self.values.iter().map(|v| rotation * v).collect();
        Self::from_unit_values(self.grid.clone(), values)
    }

    /// `u ∘ f`: the truncated expansion of `u` is evaluated at `f(node)` and
    /// renormalized to unit length.
    pub fn precompose<F: Fn(&Vector3<f64>) -> Vector3<f64>>(&self, f: F) -> Result<Self> {
        let exp = self.expansion()?;
        let mut eval = exp.evaluator();
        let mut values = Vec::with_capacity(self.values.len());
        for (node, x) in self.grid.nodes().iter().enumerate() {
            let v = eval.eval_vector(&f(x));
            let norm = v.norm();
            if !(norm >= MIN_RAW_NORM) {
                return Err(Error::DegenerateMap { node, norm });
            }
            values.push(v / norm);
        }
        Ok(Self::from_unit_values(self.grid.clone(), values))
    }

    /// Mean of `u ∘ f` without keeping the composed map.
    pub fn precomposed_mean<F: Fn(&Vector3<f64>) -> Vector3<f64>>(
        &self,
        f: F,
    ) -> Result<Vector3<f64>> {
        Ok(self.precompose(f)?.mean())
    }

    /// Whether the computed degree lies within [`DEGREE_TOLERANCE`] of `target`.
    pub fn has_degree(&self, target: f64) -> Result<bool> {
        Ok((self.degree()? - target).abs() <= DEGREE_TOLERANCE)
    }
}

/// Radial projection `v / |v|` of a raw vector field.
pub fn normalize_to_sphere(raw: &VectorField) -> Result<SphereMap> {
    let mut values = Vec::with_capacity(raw.values().len());
    for (node, v) in raw.values().iter().enumerate() {
        let norm = v.norm();
        if !(norm >= MIN_RAW_NORM) {
            return Err(Error::DegenerateMap { node, norm });
        }
        values.push(v / norm);
    }
    Ok(SphereMap::from_unit_values(raw.grid().clone(), values))
}

/// `⨍|∇u − ∇v|²`.
pub fn gradient_distance_sq(u: &SphereMap, v: &SphereMap) -> Result<f64> {
    if !Arc::ptr_eq(u.grid(), v.grid()) && !u.grid().same_shape(v.grid()) {
        return Err(Error::InvalidArgument(format!(
            "grid mismatch: {}x{} vs {}x{}",
            u.grid().n_theta(),
            u.grid().n_phi(),
            v.grid().n_theta(),
            v.grid().n_phi()
        )));
    }
    let (gu, gv) = (u.gradient()?, v.gradient()?);
    Ok(u.grid().integrate(|n, _| (gu[n] - gv[n]).norm_squared()))
}

/// Tangential projector `P_T = I − x xᵀ` at a unit vector.
pub fn tangent_projector(x: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::identity() - x * x.transpose()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Arc<SphereGrid> {
        SphereGrid::with_resolution(16).unwrap()
    }

    #[test]
    fn normalize_scales_and_is_idempotent() {
        let g = grid();
        let doubled = VectorField::from_fn(g.clone(), |x| 2.0 * x);
        let u = normalize_to_sphere(&doubled).unwrap();
        for (a, b) in u.values().iter().zip(g.nodes()) {
            assert!((a - b).norm() < 1e-15);
        }
        let shifted = VectorField::from_fn(g.clone(), |x| x + 0.1 * Vector3::x());
        let once = normalize_to_sphere(&shifted).unwrap();
        let twice = normalize_to_sphere(&once.as_field()).unwrap();
        for (a, b) in once.values().iter().zip(twice.values()) {
            assert!((a - b).norm() < 1e-15);
            assert!((a.norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_vector_is_degenerate() {
        let g = grid();
        let raw = VectorField::from_fn(g, |x| if x[2] > 0.9 { Vector3::zeros() } else { *x });
        assert!(matches!(
            normalize_to_sphere(&raw),
            Err(Error::DegenerateMap { .. })
        ));
    }

    #[test]
    fn off_sphere_values_rejected() {
        let g = grid();
        let values = g.nodes().iter().map(|x| x * 1.001).collect();
        assert!(SphereMap::new(g, values).is_err());
    }

    #[test]
    fn identity_functionals() {
        let u = SphereMap::identity(grid());
        assert!((u.degree().unwrap() - 1.0).abs() < 1e-12);
        assert!((u.dirichlet_energy().unwrap() - 1.0).abs() < 1e-12);
        assert!(u.deficit().unwrap().abs() < 1e-12);
        assert!(gradient_distance_sq(&u, &u).unwrap() == 0.0);
    }

    #[test]
    fn reflection_negates_degree_and_is_involutive() {
        let u = SphereMap::identity(grid());
        let r = u.reflect();
        assert!((r.degree().unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(r.reflect().values(), u.values());
        assert!((r.deficit().unwrap() - u.deficit().unwrap()).abs() < 1e-12);
    }

    #[test]
    fn grid_mismatch_is_an_error() {
        let a = SphereMap::identity(grid());
        let b = SphereMap::identity(SphereGrid::with_resolution(12).unwrap());
        assert!(matches!(
            gradient_distance_sq(&a, &b),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn identity_gradient_is_tangent_projector() {
        let u = SphereMap::identity(grid());
        for (g, x) in u.gradient().unwrap().iter().zip(u.grid().nodes()) {
            assert!((g - tangent_projector(x)).norm() < 1e-10);
        }
    }
}
