use std::sync::Arc;

use nalgebra::{Matrix3, Vector3};

use super::grid::SphereGrid;
use super::sh::{analyze_components, stack_gradients, ShExpansion};
use crate::error::{Error, Result};

/// One real value per grid node.
#[derive(Debug, Clone)]
pub struct ScalarField {
    grid: Arc<SphereGrid>,
    values: Vec<f64>,
}

/// One 3-vector per grid node.
#[derive(Debug, Clone)]
pub struct VectorField {
    grid: Arc<SphereGrid>,
    values: Vec<Vector3<f64>>,
}

fn check_len(grid: &SphereGrid, len: usize) -> Result<()> {
    if len != grid.len() {
        return Err(Error::InvalidArgument(format!(
            "{len} values for a grid with {} nodes",
            grid.len()
        )));
    }
    Ok(())
}

impl ScalarField {
    pub fn new(grid: Arc<SphereGrid>, values: Vec<f64>) -> Result<Self> {
        check_len(&grid, values.len())?;
        Ok(Self { grid, values })
    }

    pub fn from_fn<F: Fn(&Vector3<f64>) -> f64>(grid: Arc<SphereGrid>, f: F) -> Self {
        let values = grid.nodes().iter().map(f).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<SphereGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mean(&self) -> f64 {
        self.grid.mean_of(&self.values)
    }

    pub fn analyze(&self, k_max: usize) -> Result<ShExpansion> {
        analyze_components(&self.grid, &[&self.values], k_max)
    }

    pub fn from_expansion(grid: Arc<SphereGrid>, expansion: &ShExpansion) -> Result<Self> {
        if expansion.components() != 1 {
            return Err(Error::InvalidArgument("expansion is not scalar".into()));
        }
        let mut values = expansion.synthesize(&grid)?;
        Ok(Self {
            grid,
            values: values.remove(0),
        })
    }

    /// `Π_k` applied through a transform at the grid's maximal degree.
    pub fn project(&self, k: usize) -> Result<Self> {
        let exp = self.analyze(self.grid.max_degree())?;
        if k > exp.k_max() {
            return Err(Error::Resolution(format!(
                "degree {k} beyond grid resolution"
            )));
        }
        Self::from_expansion(self.grid.clone(), &exp.project(k))
    }

    /// Spectral tangential gradient at every node.
    pub fn gradient(&self) -> Result<Vec<Vector3<f64>>> {
        let exp = self.analyze(self.grid.max_degree())?;
        Ok(exp.gradients(&self.grid)?.remove(0))
    }
}

impl VectorField {
    pub fn new(grid: Arc<SphereGrid>, values: Vec<Vector3<f64>>) -> Result<Self> {
        check_len(&grid, values.len())?;
        Ok(Self { grid, values })
    }

    pub fn from_fn<F: Fn(&Vector3<f64>) -> Vector3<f64>>(grid: Arc<SphereGrid>, f: F) -> Self {
        let values = grid.nodes().iter().map(f).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<SphereGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[Vector3<f64>] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Vector3<f64>> {
        self.values
    }

    pub fn mean(&self) -> Vector3<f64> {
        self.grid.mean_of_vectors(&self.values)
    }

    fn split(&self) -> [Vec<f64>; 3] {
        let mut out = [
            Vec::with_capacity(self.values.len()),
            Vec::with_capacity(self.values.len()),
            Vec::with_capacity(self.values.len()),
        ];
        for v in &self.values {
            for c in 0..3 {
                out[c].push(v[c]);
            }
        }
        out
    }

    pub fn analyze(&self, k_max: usize) -> Result<ShExpansion> {
        let [a, b, c] = self.split();
        analyze_components(&self.grid, &[&a, &b, &c], k_max)
    }

    pub fn from_expansion(grid: Arc<SphereGrid>, expansion: &ShExpansion) -> Result<Self> {
        if expansion.components() != 3 {
            return Err(Error::InvalidArgument(
                "expansion is not 3-vector valued".into(),
            ));
        }
        let comps = expansion.synthesize(&grid)?;
        let values = (0..grid.len())
            .map(|n| Vector3::new(comps[0][n], comps[1][n], comps[2][n]))
            .collect();
        Ok(Self { grid, values })
    }

    pub fn project(&self, k: usize) -> Result<Self> {
        let exp = self.analyze(self.grid.max_degree())?;
        if k > exp.k_max() {
            return Err(Error::Resolution(format!(
                "degree {k} beyond grid resolution"
            )));
        }
        Self::from_expansion(self.grid.clone(), &exp.project(k))
    }

    /// Spectral tangential Jacobian: row `i` is `∇_{S²}` of component `i`.
    pub fn gradient(&self) -> Result<Vec<Matrix3<f64>>> {
        let exp = self.analyze(self.grid.max_degree())?;
        stack_gradients(&exp.gradients(&self.grid)?)
    }
}

/// Rayleigh quotient `⨍|∇f|² / ⨍f²` of a representative degree-`k` harmonic.
///
/// `k = 1` uses `x₃`, `k = 2` uses `x₁x₂`.
pub fn laplace_eigencheck(grid: &Arc<SphereGrid>, k: usize) -> Result<f64> {
    let f = match k {
        1 => ScalarField::from_fn(grid.clone(), |x| x[2]),
        2 => ScalarField::from_fn(grid.clone(), |x| x[0] * x[1]),
        _ => {
            return Err(Error::InvalidArgument(format!(
                "eigencheck supports k in {{1, 2}}, got {k}"
            )))
        }
    };
    rayleigh_quotient(&f)
}

/// `⨍|∇f|² / ⨍f²` with the spectral gradient.
pub fn rayleigh_quotient(f: &ScalarField) -> Result<f64> {
    let grad = f.gradient()?;
    let num = f.grid().integrate(|n, _| grad[n].norm_squared());
    let den = f.grid().integrate(|n, _| f.values()[n] * f.values()[n]);
    Ok(num / den)
}
