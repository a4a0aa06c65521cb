//! Spectral toolkit for maps of the unit sphere into itself.
//!
//! The crate measures how far a degree-one map `u: S² → S²` is from the
//! Möbius group. It computes the topological degree, the conformal deficit
//! `D(u) = ½⨍|∇u|² − 1`, recenters maps with Möbius precompositions, and
//! evaluates every ingredient of the linearized rigidity argument (linear
//! coefficient, polar factors, volume quadratic form, cubic term) so that
//! the bound `⨍|∇u − ∇φ|² ≤ c·D(u)` can be checked numerically.
//!
//! Modules:
//! - [`sphere`]: grids, quadrature, spherical harmonics, spectral gradients
//! - [`maps`]: sphere-valued maps and their integral functionals
//! - [`moebius`]: the orientation-preserving Möbius group and centering
//! - [`rigidity`]: the linearized pipeline and the end-to-end report
//! - [`experiments`]: map generators, sweeps and convergence studies

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiments;
pub mod maps;
pub mod moebius;
pub mod rigidity;
pub mod sphere;

pub use error::{Error, Result};
