use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use nalgebra::Vector3;

use super::quadrature::{compensated_sum, gauss_legendre, Compensated};
use super::sh::ShBasis;
use crate::error::{Error, Result};

/// Gauss–Legendre × equispaced-longitude rule on the unit sphere.
///
/// Node `(i, j)` sits on colatitude ring `i` (north to south) and longitude
/// `2πj / n_phi`; its flat index is `i * n_phi + j`. Weights are normalized
/// to average (they sum to one), so every integral in this crate is a mean.
#[derive(Debug)]
pub struct SphereGrid {
    n_theta: usize,
    n_phi: usize,
    cos_theta: Vec<f64>,
    sin_theta: Vec<f64>,
    ring_weights: Vec<f64>,
    cos_table: Vec<f64>,
    sin_table: Vec<f64>,
    nodes: Vec<Vector3<f64>>,
    weights: Vec<f64>,
    frames: Vec<[Vector3<f64>; 2]>,
    basis: OnceLock<Arc<ShBasis>>,
}

impl SphereGrid {
    pub const MIN_THETA: usize = 4;
    pub const MIN_PHI: usize = 8;

    pub fn new(n_theta: usize, n_phi: usize) -> Result<Self> {
        if n_theta < Self::MIN_THETA {
            return Err(Error::InvalidArgument(format!(
                "n_theta = {n_theta} is below the minimum {}",
                Self::MIN_THETA
            )));
        }
        if n_phi < Self::MIN_PHI || !n_phi.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "n_phi = {n_phi} must be even and at least {}",
                Self::MIN_PHI
            )));
        }

        let (cos_theta, mut gl_weights) = gauss_legendre(n_theta);
        let total = compensated_sum(gl_weights.iter().copied());
        for w in &mut gl_weights {
            *w *= 2.0 / total;
        }
        let sin_theta: Vec<f64> = cos_theta
            .iter()
            .map(|&t| ((1.0 - t) * (1.0 + t)).sqrt())
            .collect();
        let ring_weights: Vec<f64> = gl_weights
            .iter()
            .map(|w| w / (2.0 * n_phi as f64))
            .collect();

        let (cos_table, sin_table): (Vec<f64>, Vec<f64>) = (0..n_phi)
            .map(|r| {
                let angle = 2.0 * PI * r as f64 / n_phi as f64;
                (angle.cos(), angle.sin())
            })
            .unzip();

        let n = n_theta * n_phi;
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        let mut frames = Vec::with_capacity(n);
        for i in 0..n_theta {
            let (t, s) = (cos_theta[i], sin_theta[i]);
            for j in 0..n_phi {
                let (c, sp) = (cos_table[j], sin_table[j]);
                nodes.push(Vector3::new(s * c, s * sp, t));
                weights.push(ring_weights[i]);
                // colatitude and longitude directions; e_theta × e_phi = x
                frames.push([Vector3::new(t * c, t * sp, -s), Vector3::new(-sp, c, 0.0)]);
            }
        }

        Ok(Self {
            n_theta,
            n_phi,
            cos_theta,
            sin_theta,
            ring_weights,
            cos_table,
            sin_table,
            nodes,
            weights,
            frames,
            basis: OnceLock::new(),
        })
    }

    /// Shared grid; the usual way grids are passed around.
    pub fn shared(n_theta: usize, n_phi: usize) -> Result<Arc<Self>> {
        Self::new(n_theta, n_phi).map(Arc::new)
    }

    /// Grid with `n_phi = 2 * n_theta`, the resolution used throughout the CLI.
    pub fn with_resolution(n_theta: usize) -> Result<Arc<Self>> {
        Self::shared(n_theta, 2 * n_theta)
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Vector3<f64>] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Per-node tangent pair `(τ₁, τ₂)` with `τ₁ × τ₂ = x`.
    pub fn frames(&self) -> &[[Vector3<f64>; 2]] {
        &self.frames
    }

    pub fn cos_theta(&self) -> &[f64] {
        &self.cos_theta
    }

    pub fn sin_theta(&self) -> &[f64] {
        &self.sin_theta
    }

    pub fn ring_weights(&self) -> &[f64] {
        &self.ring_weights
    }

    /// Colatitude of ring `i`.
    pub fn theta(&self, i: usize) -> f64 {
        self.sin_theta[i].atan2(self.cos_theta[i])
    }

    /// Longitude of column `j`.
    pub fn phi(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.n_phi as f64
    }

    /// `cos(m φ_j)` and `sin(m φ_j)` read from the exact table.
    #[inline]
    pub(crate) fn trig(&self, m: usize, j: usize) -> (f64, f64) {
        let r = (m * j) % self.n_phi;
        (self.cos_table[r], self.sin_table[r])
    }

    /// Largest spherical-harmonic degree the grid transforms without aliasing.
    pub fn max_degree(&self) -> usize {
        (self.n_theta - 2).min(self.n_phi / 2 - 1)
    }

    pub fn check_degree(&self, k_max: usize) -> Result<()> {
        if k_max > self.max_degree() {
            return Err(Error::Resolution(format!(
                "k_max = {k_max} exceeds {} supported by a {}x{} grid",
                self.max_degree(),
                self.n_theta,
                self.n_phi
            )));
        }
        Ok(())
    }

    /// Legendre tables for degree `k_max`; the grid's own maximum is cached.
    pub fn basis(&self, k_max: usize) -> Result<Arc<ShBasis>> {
        self.check_degree(k_max)?;
        if k_max == self.max_degree() {
            Ok(self
                .basis
                .get_or_init(|| Arc::new(ShBasis::new(self, k_max)))
                .clone())
        } else {
            Ok(Arc::new(ShBasis::new(self, k_max)))
        }
    }

    /// Weighted mean of per-node scalars, compensated, in node order.
    pub fn mean_of(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        compensated_sum(self.weights.iter().zip(values).map(|(w, v)| w * v))
    }

    /// Weighted mean of per-node 3-vectors.
    pub fn mean_of_vectors(&self, values: &[Vector3<f64>]) -> Vector3<f64> {
        debug_assert_eq!(values.len(), self.len());
        let mut acc = [Compensated::new(); 3];
        for (w, v) in self.weights.iter().zip(values) {
            for c in 0..3 {
                acc[c].add(w * v[c]);
            }
        }
        Vector3::new(acc[0].value(), acc[1].value(), acc[2].value())
    }

    /// Mean of a function evaluated at every node.
    pub fn integrate<F: Fn(usize, &Vector3<f64>) -> f64>(&self, f: F) -> f64 {
        let mut acc = Compensated::new();
        for (idx, (w, x)) in self.weights.iter().zip(&self.nodes).enumerate() {
            acc.add(w * f(idx, x));
        }
        acc.value()
    }

    pub fn same_shape(&self, other: &SphereGrid) -> bool {
        self.n_theta == other.n_theta && self.n_phi == other.n_phi
    }
}
