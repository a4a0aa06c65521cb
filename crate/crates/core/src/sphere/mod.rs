//! Quadrature, spherical-harmonic transforms and tangential derivatives on S².

mod field;
mod grid;
pub mod quadrature;
pub mod sh;

pub use field::{laplace_eigencheck, rayleigh_quotient, ScalarField, VectorField};
pub use grid::SphereGrid;
pub use sh::{ShEvaluator, ShExpansion};

use std::sync::Arc;

/// Builds a shared Gauss–Legendre × equispaced grid.
pub fn build_grid(n_theta: usize, n_phi: usize) -> crate::Result<Arc<SphereGrid>> {
    SphereGrid::shared(n_theta, n_phi)
}
