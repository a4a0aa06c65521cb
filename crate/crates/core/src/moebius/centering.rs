//! Möbius recentering: find `ψ = φ_{ξ₀,λ₀}` with `⨍ u∘ψ = 0`.
//!
//! The homotopy `F(ξ, λ) = ⨍ u∘φ_{ξ,λ}` joins `u(ξ)` (as `λ → 0`) to the
//! mean of `u` (at `λ = 1`). The solver runs damped Newton iterations on the
//! three components of the boost vector `v = −log λ · ξ`:
//!
//! 1. on the change-of-variables form `⨍ u · J_{φ⁻¹}`, which costs one pass
//!    over the grid per evaluation, then
//! 2. on the composed map itself (spectral interpolation of `u` at
//!    `φ(node)`), reusing the cheap Jacobian, until the composed mean meets
//!    the tolerance.
//!
//! Starts come from a deterministic schedule: the identity for nearly
//! centered maps, the preimage of `−⨍u` with a scan in `λ`, then the best points of a coarse `S² × {2⁻⁶ … 1}` search.

use nalgebra::{Matrix3, Vector3};

use super::{dilate, dilation_jacobian, MoebiusTransform};
use crate::error::{Error, Result};
use crate::maps::SphereMap;

/// Maps with `|⨍u|` below this also try the identity as a first start.
const NEAR_CENTERED: f64 = 0.25;

#[derive(Debug, Clone)]
pub struct CenteringOptions {
    /// Required bound on `|⨍ u∘ψ|`.
    pub tolerance: f64,
    /// Iteration stops early once the residual drops below this.
    pub target: f64,
    /// Lower bound on `λ`; solutions below it are reported as bubbling.
    pub lambda_floor: f64,
    /// Coarse-search restarts tried after the primary start.
    pub max_restarts: usize,
    pub newton_iterations: usize,
    pub polish_iterations: usize,
}

impl Default for CenteringOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            target: 1e-13,
            lambda_floor: 2f64.powi(-10),
            max_restarts: 4,
            newton_iterations: 40,
            polish_iterations: 12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CenteringResult {
    /// Pure dilation with `λ ≤ 1`.
    pub psi: MoebiusTransform,
    /// Achieved mean `⨍ u∘ψ`.
    pub residual: Vector3<f64>,
    pub iterations: usize,
}

/// `F(ξ, λ) = ⨍ u∘φ_{ξ,λ}` through the composed map, `λ ∈ (0, 1]`.
pub fn homotopy_f(u: &SphereMap, xi: &Vector3<f64>, lambda: f64) -> Result<Vector3<f64>> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "λ = {lambda} outside (0, 1]"
        )));
    }
    composed_mean(u, xi, lambda)
}

/// `F(ξ, λ)` by change of variables: `⨍ u(y) J_{φ_{ξ,1/λ}}(y) dy`.
pub fn homotopy_f_weighted(u: &SphereMap, xi: &Vector3<f64>, lambda: f64) -> Vector3<f64> {
    let grid = u.grid();
    let inv = 1.0 / lambda;
    let mut acc = [crate::sphere::quadrature::Compensated::new(); 3];
    for ((w, y), v) in grid.weights().iter().zip(grid.nodes()).zip(u.values()) {
        let weight = w * dilation_jacobian(xi, inv, y);
        for c in 0..3 {
            acc[c].add(weight * v[c]);
        }
    }
    Vector3::new(acc[0].value(), acc[1].value(), acc[2].value())
}

fn composed_mean(u: &SphereMap, xi: &Vector3<f64>, lambda: f64) -> Result<Vector3<f64>> {
    if lambda == 1.0 {
        return Ok(u.mean());
    }
    u.precomposed_mean(|x| dilate(xi, lambda, x))
}

/// Dilation parameters as a boost vector: `ξ = v/|v|`, `λ = e^{−|v|}`.
/// Smooth through `v = 0` (the identity), unlike `(ξ, log λ)`.
fn from_boost(v: &Vector3<f64>) -> (Vector3<f64>, f64) {
    let t = v.norm();
    if t == 0.0 {
        (Vector3::z(), 1.0)
    } else {
        (v / t, (-t).exp())
    }
}

#[derive(Debug, Clone, Copy)]
struct State {
    v: Vector3<f64>,
    residual: Vector3<f64>,
}

fn jacobian<F>(f: &mut F, v: &Vector3<f64>) -> Result<Matrix3<f64>>
where
    F: FnMut(&Vector3<f64>, f64) -> Result<Vector3<f64>>,
{
    const H: f64 = 1e-6;
    let mut jac = Matrix3::zeros();
    for k in 0..3 {
        let mut plus = *v;
        let mut minus = *v;
        plus[k] += H;
        minus[k] -= H;
        let (xp, lp) = from_boost(&plus);
        let (xm, lm) = from_boost(&minus);
        jac.set_column(k, &((f(&xp, lp)? - f(&xm, lm)?) / (2.0 * H)));
    }
    Ok(jac)
}

/// Damped Newton on `residual_fn`, with Jacobians from `jac_fn`.
fn newton<F, J>(
    residual_fn: &mut F,
    jac_fn: &mut J,
    start: State,
    iterations: usize,
    target: f64,
    count: &mut usize,
) -> Result<State>
where
    F: FnMut(&Vector3<f64>, f64) -> Result<Vector3<f64>>,
    J: FnMut(&Vector3<f64>, f64) -> Result<Vector3<f64>>,
{
    const MAX_RAPIDITY: f64 = 30.0;
    let mut state = start;
    for _ in 0..iterations {
        let norm = state.residual.norm();
        if norm <= target {
            break;
        }
        let jac = jacobian(jac_fn, &state.v)?;
        let Some(step) = jac.lu().solve(&(-state.residual)) else {
            break;
        };
        if !step.iter().all(|v| v.is_finite()) {
            break;
        }
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..12 {
            let mut v = state.v + step * alpha;
            if v.norm() > MAX_RAPIDITY {
                v *= MAX_RAPIDITY / v.norm();
            }
            let (xi, lambda) = from_boost(&v);
            let r = residual_fn(&xi, lambda)?;
            if r.norm() < norm {
                accepted = Some(State { v, residual: r });
                break;
            }
            alpha *= 0.5;
        }
        *count += 1;
        match accepted {
            Some(next) => state = next,
            None => break,
        }
    }
    Ok(state)
}

fn fibonacci_directions(count: usize) -> Vec<Vector3<f64>> {
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

/// Centers `u` with the default options.
pub fn center_map(u: &SphereMap) -> Result<CenteringResult> {
    center_map_with(u, &CenteringOptions::default())
}

pub fn center_map_with(u: &SphereMap, opts: &CenteringOptions) -> Result<CenteringResult> {
    let degree = u.degree()?;
    if (degree - 1.0).abs() > crate::maps::DEGREE_TOLERANCE {
        return Err(Error::InvalidArgument(format!(
            "centering needs a degree-1 map, computed degree {degree}"
        )));
    }
    let mean = u.mean();
    if mean.norm() <= opts.target {
        return Ok(CenteringResult {
            psi: MoebiusTransform::identity(),
            residual: mean,
            iterations: 0,
        });
    }

    let mut cheap = |xi: &Vector3<f64>, lambda: f64| Ok(homotopy_f_weighted(u, xi, lambda));

    // Schedule: the preimage of −⨍u, then the best coarse-grid points.
    let direction = mean.normalize();
    let preimage = u
        .values()
        .iter()
        .zip(u.grid().nodes())
        .min_by(|a, b| a.0.dot(&direction).total_cmp(&b.0.dot(&direction)))
        .map(|(_, x)| *x)
        .expect("grid is nonempty");
    let scan = (0..=20).map(|j| -(j as f64) * 0.5 * std::f64::consts::LN_2);
    let best_scan = scan
        .map(|ll| (ll, homotopy_f_weighted(u, &preimage, ll.exp()).norm()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("nonempty scan");
    let mut starts = vec![preimage * -best_scan.0];
    if mean.norm() <= NEAR_CENTERED {
        starts.insert(0, Vector3::zeros());
    }

    let mut coarse: Vec<(Vector3<f64>, f64, f64)> = Vec::new();
    for xi in fibonacci_directions(48) {
        for j in 0..=6 {
            let ll = -(j as f64) * std::f64::consts::LN_2;
            coarse.push((xi, ll, homotopy_f_weighted(u, &xi, ll.exp()).norm()));
        }
    }
    coarse.sort_by(|a, b| a.2.total_cmp(&b.2));
    starts.extend(
        coarse
            .iter()
            .take(opts.max_restarts)
            .map(|(xi, ll, _)| xi * -ll),
    );

    let mut iterations = 0;
    let mut best_residual = f64::INFINITY;
    for v0 in starts {
        let (xi0, lambda0) = from_boost(&v0);
        let start = State {
            v: v0,
            residual: homotopy_f_weighted(u, &xi0, lambda0),
        };
        let mut cheap_jac = |xi: &Vector3<f64>, lambda: f64| Ok(homotopy_f_weighted(u, xi, lambda));
        let rough = newton(
            &mut cheap,
            &mut cheap_jac,
            start,
            opts.newton_iterations,
            opts.target * 1e-2,
            &mut iterations,
        )?;

        let mut exact = |xi: &Vector3<f64>, lambda: f64| composed_mean(u, xi, lambda);
        let (xi1, lambda1) = from_boost(&rough.v);
        let polish_start = State {
            residual: exact(&xi1, lambda1)?,
            ..rough
        };
        let mut polished = newton(
            &mut exact,
            &mut cheap_jac,
            polish_start,
            opts.polish_iterations,
            opts.target,
            &mut iterations,
        )?;
        if polished.residual.norm() > opts.tolerance {
            // Jacobian of the composed mean itself; slower but exact.
            let mut exact_jac = |xi: &Vector3<f64>, lambda: f64| composed_mean(u, xi, lambda);
            polished = newton(
                &mut exact,
                &mut exact_jac,
                polished,
                opts.polish_iterations,
                opts.target,
                &mut iterations,
            )?;
        }

        let (xi, lambda) = from_boost(&polished.v);
        let psi = MoebiusTransform::dilation(xi, lambda)?.canonical();
        let residual_norm = polished.residual.norm();
        best_residual = best_residual.min(residual_norm);
        if residual_norm <= opts.tolerance && psi.lambda() >= opts.lambda_floor {
            return Ok(CenteringResult {
                psi,
                residual: polished.residual,
                iterations,
            });
        }
    }
    Err(Error::CenteringFailure {
        restarts: opts.max_restarts,
        best_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::SphereGrid;

    #[test]
    fn identity_needs_no_centering() {
        let u = SphereMap::identity(SphereGrid::with_resolution(16).unwrap());
        let res = center_map(&u).unwrap();
        assert!(res.psi.is_rotation());
        assert_eq!(res.iterations, 0);
        assert!(res.residual.norm() < 1e-15);
    }

    #[test]
    fn homotopy_at_unit_lambda_is_the_mean() {
        let grid = SphereGrid::with_resolution(16).unwrap();
        let u = SphereMap::from_fn(grid, |x| x + Vector3::new(0.2, 0.0, 0.1)).unwrap();
        let b = u.mean();
        for xi in fibonacci_directions(5) {
            assert_eq!(homotopy_f(&u, &xi, 1.0).unwrap(), b);
            assert!((homotopy_f_weighted(&u, &xi, 1.0) - b).norm() < 1e-15);
        }
        assert!(homotopy_f(&u, &Vector3::z(), 1.5).is_err());
        assert!(homotopy_f(&u, &Vector3::z(), 0.0).is_err());
    }

    #[test]
    fn dilation_undoes_itself() {
        let grid = SphereGrid::with_resolution(32).unwrap();
        let u = MoebiusTransform::dilation(Vector3::z(), 2.0)
            .unwrap()
            .as_map(&grid);
        let f = homotopy_f(&u, &Vector3::z(), 0.5).unwrap();
        assert!(f.norm() < 1e-9, "{f}");
    }

    #[test]
    fn non_degree_one_rejected() {
        let u = SphereMap::identity(SphereGrid::with_resolution(16).unwrap()).reflect();
        assert!(matches!(center_map(&u), Err(Error::InvalidArgument(_))));
    }
}
