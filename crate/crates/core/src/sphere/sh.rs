//! Real spherical harmonics on the Gauss grid.
//!
//! Basis functions are normalized to unit mean square (`⨍Y² = 1`):
//!
//! ```text
//! Y(k, 0)  = P̄(k,0)(cos θ)
//! Y(k, m)  = √2 P̄(k,m)(cos θ) cos(mφ)      m > 0
//! Y(k, -m) = √2 P̄(k,m)(cos θ) sin(mφ)
//! ```
//!
//! with `½∫P̄(k,m)² dt = 1` and no Condon–Shortley phase. Coefficients of one
//! component are stored at `k² + slot`, where slot 0 is `m = 0`, slot `2m-1`
//! the cosine and slot `2m` the sine term of order `m`.

use std::f64::consts::SQRT_2;

use nalgebra::{Matrix3, Vector3};

use super::grid::SphereGrid;
use crate::error::{Error, Result};

/// Recurrence coefficients for fully normalized associated Legendre functions.
#[derive(Debug, Clone)]
pub(crate) struct Legendre {
    k_max: usize,
    diag: Vec<f64>,
    first: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
    d: Vec<f64>,
}

impl Legendre {
    pub(crate) fn new(k_max: usize) -> Self {
        let len = tri_len(k_max);
        let mut a = vec![0.0; len];
        let mut b = vec![0.0; len];
        let mut d = vec![0.0; len];
        for m in 0..=k_max {
            for k in m..=k_max {
                let idx = tri_index(k_max, k, m);
                let (kf, mf) = (k as f64, m as f64);
                if k >= m + 2 {
                    a[idx] = ((4.0 * kf * kf - 1.0) / (kf * kf - mf * mf)).sqrt();
                    let km1 = kf - 1.0;
                    b[idx] = ((km1 * km1 - mf * mf) / (4.0 * km1 * km1 - 1.0)).sqrt();
                }
                if k > m {
                    d[idx] = ((kf * kf - mf * mf) * (2.0 * kf + 1.0) / (2.0 * kf - 1.0)).sqrt();
                }
            }
        }
        let diag = (0..=k_max)
            .map(|m| {
                if m == 0 {
                    1.0
                } else {
                    ((2.0 * m as f64 + 1.0) / (2.0 * m as f64)).sqrt()
                }
            })
            .collect();
        let first = (0..=k_max).map(|m| (2.0 * m as f64 + 3.0).sqrt()).collect();
        Self {
            k_max,
            diag,
            first,
            a,
            b,
            d,
        }
    }

    /// Fill `p` (and `dp = dP̄/dθ` when given) at `t = cos θ`, `s = sin θ`.
    pub(crate) fn eval(&self, t: f64, s: f64, p: &mut [f64], dp: Option<&mut [f64]>) {
        let k_max = self.k_max;
        let mut pmm = 1.0;
        for m in 0..=k_max {
            if m > 0 {
                pmm *= self.diag[m] * s;
            }
            let base = tri_index(k_max, m, m);
            p[base] = pmm;
            if m < k_max {
                p[base + 1] = self.first[m] * t * pmm;
            }
            for k in (m + 2)..=k_max {
                let idx = base + (k - m);
                p[idx] = self.a[idx] * (t * p[idx - 1] - self.b[idx] * p[idx - 2]);
            }
        }
        if let Some(dp) = dp {
            for m in 0..=k_max {
                let base = tri_index(k_max, m, m);
                for k in m..=k_max {
                    let idx = base + (k - m);
                    let lower = if k > m { self.d[idx] * p[idx - 1] } else { 0.0 };
                    dp[idx] = (k as f64 * t * p[idx] - lower) / s;
                }
            }
        }
    }
}

/// Length of a triangular (k, m) table, `0 ≤ m ≤ k ≤ k_max`.
#[inline]
pub(crate) fn tri_len(k_max: usize) -> usize {
    (k_max + 1) * (k_max + 2) / 2
}

/// Position of `(k, m)` in a table grouped by `m`, then `k`.
#[inline]
pub(crate) fn tri_index(k_max: usize, k: usize, m: usize) -> usize {
    m * (k_max + 1) - m * (m.saturating_sub(1)) / 2 + (k - m)
}

/// Position of the `(k, m)` coefficient (signed `m`: negative for sine).
#[inline]
pub fn coeff_index(k: usize, m: i64) -> usize {
    let slot = match m.cmp(&0) {
        std::cmp::Ordering::Equal => 0,
        std::cmp::Ordering::Greater => 2 * m as usize - 1,
        std::cmp::Ordering::Less => 2 * (-m) as usize,
    };
    k * k + slot
}

/// Legendre values and θ-derivatives on the rings of one grid.
#[derive(Debug)]
pub struct ShBasis {
    k_max: usize,
    tri: usize,
    p: Vec<f64>,
    dp: Vec<f64>,
}

impl ShBasis {
    pub(crate) fn new(grid: &SphereGrid, k_max: usize) -> Self {
        let tri = tri_len(k_max);
        let n_theta = grid.n_theta();
        let mut p = vec![0.0; n_theta * tri];
        let mut dp = vec![0.0; n_theta * tri];
        let legendre = Legendre::new(k_max);
        for i in 0..n_theta {
            let (t, s) = (grid.cos_theta()[i], grid.sin_theta()[i]);
            legendre.eval(
                t,
                s,
                &mut p[i * tri..(i + 1) * tri],
                Some(&mut dp[i * tri..(i + 1) * tri]),
            );
        }
        Self { k_max, tri, p, dp }
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    #[inline]
    fn p(&self, ring: usize, k: usize, m: usize) -> f64 {
        self.p[ring * self.tri + tri_index(self.k_max, k, m)]
    }

    #[inline]
    fn dp(&self, ring: usize, k: usize, m: usize) -> f64 {
        self.dp[ring * self.tri + tri_index(self.k_max, k, m)]
    }
}

/// Spherical-harmonic coefficients of a scalar or vector field.
#[derive(Debug, Clone, PartialEq)]
pub struct ShExpansion {
    k_max: usize,
    coeffs: Vec<Vec<f64>>,
}

impl ShExpansion {
    pub fn zeros(k_max: usize, components: usize) -> Self {
        Self {
            k_max,
            coeffs: vec![vec![0.0; (k_max + 1) * (k_max + 1)]; components],
        }
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn components(&self) -> usize {
        self.coeffs.len()
    }

    /// Eigenvalue of `-Δ` on degree `k`.
    pub fn eigenvalue(k: usize) -> f64 {
        (k * (k + 1)) as f64
    }

    pub fn coefficient(&self, component: usize, k: usize, m: i64) -> f64 {
        self.coeffs[component][coeff_index(k, m)]
    }

    pub fn set_coefficient(&mut self, component: usize, k: usize, m: i64, value: f64) {
        self.coeffs[component][coeff_index(k, m)] = value;
    }

    pub fn component(&self, component: usize) -> &[f64] {
        &self.coeffs[component]
    }

    /// Sum of squared coefficients of degree `k` over all components.
    pub fn degree_power(&self, k: usize) -> f64 {
        self.coeffs
            .iter()
            .map(|c| {
                c[k * k..(k + 1) * (k + 1)]
                    .iter()
                    .map(|v| v * v)
                    .sum::<f64>()
            })
            .sum()
    }

    /// Sum of all squared coefficients; equals `⨍|f|²` for band-limited fields.
    pub fn power(&self) -> f64 {
        (0..=self.k_max).map(|k| self.degree_power(k)).sum()
    }

    /// `Σ λ_k |Π_k f|²`, the spectral Dirichlet integral `⨍|∇f|²`.
    pub fn dirichlet(&self) -> f64 {
        (1..=self.k_max)
            .map(|k| Self::eigenvalue(k) * self.degree_power(k))
            .sum()
    }

    /// Expansion with only the degree-`k` part retained (`Π_k`).
    pub fn project(&self, k: usize) -> Self {
        let mut out = Self::zeros(self.k_max, self.components());
        if k <= self.k_max {
            for (dst, src) in out.coeffs.iter_mut().zip(&self.coeffs) {
                dst[k * k..(k + 1) * (k + 1)].copy_from_slice(&src[k * k..(k + 1) * (k + 1)]);
            }
        }
        out
    }

    /// Values at grid nodes, one vector per component.
    pub fn synthesize(&self, grid: &SphereGrid) -> Result<Vec<Vec<f64>>> {
        let basis = grid.basis(self.k_max)?;
        Ok(self
            .coeffs
            .iter()
            .map(|c| synthesize_component(grid, &basis, c, Derivative::None))
            .collect())
    }

    /// Tangential gradients at grid nodes, one 3-vector per node and component.
    pub fn gradients(&self, grid: &SphereGrid) -> Result<Vec<Vec<Vector3<f64>>>> {
        let basis = grid.basis(self.k_max)?;
        let mut out = Vec::with_capacity(self.components());
        for c in &self.coeffs {
            let d_theta = synthesize_component(grid, &basis, c, Derivative::Theta);
            let d_phi = synthesize_component(grid, &basis, c, Derivative::PhiOverSin);
            out.push(
                grid.frames()
                    .iter()
                    .zip(d_theta.iter().zip(&d_phi))
                    .map(|([e_theta, e_phi], (a, b))| e_theta * *a + e_phi * *b)
                    .collect(),
            );
        }
        Ok(out)
    }

    /// Point evaluator for off-grid samples (used for composition).
    pub fn evaluator(&self) -> ShEvaluator<'_> {
        ShEvaluator::new(self)
    }
}

#[derive(Clone, Copy)]
enum Derivative {
    None,
    Theta,
    PhiOverSin,
}

/// Forward transform of per-node component values.
pub(crate) fn analyze_components(
    grid: &SphereGrid,
    components: &[&[f64]],
    k_max: usize,
) -> Result<ShExpansion> {
    let basis = grid.basis(k_max)?;
    let (n_theta, n_phi) = (grid.n_theta(), grid.n_phi());
    let mut out = ShExpansion::zeros(k_max, components.len());
    let mut cos_sums = vec![0.0; k_max + 1];
    let mut sin_sums = vec![0.0; k_max + 1];
    for (values, coeffs) in components.iter().zip(out.coeffs.iter_mut()) {
        debug_assert_eq!(values.len(), grid.len());
        for i in 0..n_theta {
            let ring = &values[i * n_phi..(i + 1) * n_phi];
            for m in 0..=k_max {
                let (mut cs, mut ss) = (0.0, 0.0);
                for (j, v) in ring.iter().enumerate() {
                    let (c, s) = grid.trig(m, j);
                    cs += v * c;
                    ss += v * s;
                }
                cos_sums[m] = cs;
                sin_sums[m] = ss;
            }
            let w = grid.ring_weights()[i];
            for k in 0..=k_max {
                coeffs[coeff_index(k, 0)] += w * basis.p(i, k, 0) * cos_sums[0];
                for m in 1..=k {
                    let pw = w * SQRT_2 * basis.p(i, k, m);
                    coeffs[coeff_index(k, m as i64)] += pw * cos_sums[m];
                    coeffs[coeff_index(k, -(m as i64))] += pw * sin_sums[m];
                }
            }
        }
    }
    Ok(out)
}

fn synthesize_component(
    grid: &SphereGrid,
    basis: &ShBasis,
    coeffs: &[f64],
    derivative: Derivative,
) -> Vec<f64> {
    let k_max = basis.k_max();
    let (n_theta, n_phi) = (grid.n_theta(), grid.n_phi());
    let mut out = vec![0.0; grid.len()];
    let mut cos_amp = vec![0.0; k_max + 1];
    let mut sin_amp = vec![0.0; k_max + 1];
    for i in 0..n_theta {
        for m in 0..=k_max {
            let (mut ca, mut sa) = (0.0, 0.0);
            for k in m..=k_max {
                let p = match derivative {
                    Derivative::Theta => basis.dp(i, k, m),
                    _ => basis.p(i, k, m),
                };
                if m == 0 {
                    ca += coeffs[coeff_index(k, 0)] * p;
                } else {
                    ca += coeffs[coeff_index(k, m as i64)] * p;
                    sa += coeffs[coeff_index(k, -(m as i64))] * p;
                }
            }
            let scale = if m == 0 { 1.0 } else { SQRT_2 };
            cos_amp[m] = ca * scale;
            sin_amp[m] = sa * scale;
        }
        let inv_sin = 1.0 / grid.sin_theta()[i];
        let row = &mut out[i * n_phi..(i + 1) * n_phi];
        for (j, v) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for m in 0..=k_max {
                let (c, s) = grid.trig(m, j);
                acc += match derivative {
                    Derivative::PhiOverSin => m as f64 * (sin_amp[m] * c - cos_amp[m] * s),
                    _ => cos_amp[m] * c + sin_amp[m] * s,
                };
            }
            *v = match derivative {
                Derivative::PhiOverSin => acc * inv_sin,
                _ => acc,
            };
        }
    }
    out
}

/// Evaluates an expansion at arbitrary unit vectors.
///
/// Coefficients are regrouped by order `m` so the inner loop runs over
/// contiguous degrees.
pub struct ShEvaluator<'a> {
    expansion: &'a ShExpansion,
    legendre: Legendre,
    grouped: Vec<Vec<[f64; 2]>>,
    scratch: Vec<f64>,
}

impl<'a> ShEvaluator<'a> {
    fn new(expansion: &'a ShExpansion) -> Self {
        let k_max = expansion.k_max;
        let tri = tri_len(k_max);
        let grouped = expansion
            .coeffs
            .iter()
            .map(|c| {
                let mut g = vec![[0.0; 2]; tri];
                for m in 0..=k_max {
                    for k in m..=k_max {
                        let idx = tri_index(k_max, k, m);
                        g[idx] = if m == 0 {
                            [c[coeff_index(k, 0)], 0.0]
                        } else {
                            [
                                SQRT_2 * c[coeff_index(k, m as i64)],
                                SQRT_2 * c[coeff_index(k, -(m as i64))],
                            ]
                        };
                    }
                }
                g
            })
            .collect();
        Self {
            expansion,
            legendre: Legendre::new(k_max),
            grouped,
            scratch: vec![0.0; tri],
        }
    }

    /// Component values at the unit vector `x`.
    pub fn eval_into(&mut self, x: &Vector3<f64>, out: &mut [f64]) {
        let k_max = self.expansion.k_max;
        let rho = x[0].hypot(x[1]);
        let t = x[2] / x.norm();
        let s = rho / x.norm();
        let (cphi, sphi) = if rho > 0.0 {
            (x[0] / rho, x[1] / rho)
        } else {
            (1.0, 0.0)
        };
        self.legendre.eval(t, s, &mut self.scratch, None);
        out.iter_mut().for_each(|v| *v = 0.0);
        let (mut cm, mut sm) = (1.0, 0.0);
        for m in 0..=k_max {
            let base = tri_index(k_max, m, m);
            let p = &self.scratch[base..base + (k_max + 1 - m)];
            for (comp, g) in self.grouped.iter().enumerate() {
                let g = &g[base..base + (k_max + 1 - m)];
                let (mut ca, mut sa) = (0.0, 0.0);
                for (pk, gk) in p.iter().zip(g) {
                    ca += gk[0] * pk;
                    sa += gk[1] * pk;
                }
                out[comp] += ca * cm + sa * sm;
            }
            let next_c = cm * cphi - sm * sphi;
            sm = sm * cphi + cm * sphi;
            cm = next_c;
        }
    }

    pub fn eval_vector(&mut self, x: &Vector3<f64>) -> Vector3<f64> {
        let mut out = [0.0; 3];
        self.eval_into(x, &mut out);
        Vector3::new(out[0], out[1], out[2])
    }

    pub fn eval_scalar(&mut self, x: &Vector3<f64>) -> f64 {
        let mut out = [0.0];
        self.eval_into(x, &mut out);
        out[0]
    }
}

/// Stacks per-component gradients into per-node 3×3 matrices (rows = components).
pub(crate) fn stack_gradients(grads: &[Vec<Vector3<f64>>]) -> Result<Vec<Matrix3<f64>>> {
    if grads.len() != 3 {
        return Err(Error::InvalidArgument(format!(
            "expected 3 components, got {}",
            grads.len()
        )));
    }
    Ok((0..grads[0].len())
        .map(|n| {
            Matrix3::from_rows(&[
                grads[0][n].transpose(),
                grads[1][n].transpose(),
                grads[2][n].transpose(),
            ])
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_layouts_are_dense() {
        let k_max = 7;
        let mut seen = vec![false; tri_len(k_max)];
        for m in 0..=k_max {
            for k in m..=k_max {
                let idx = tri_index(k_max, k, m);
                assert!(!seen[idx]);
                seen[idx] = true;
            }
        }
        assert!(seen.into_iter().all(|s| s));

        let mut seen = vec![false; 64];
        for k in 0..8usize {
            for m in -(k as i64)..=(k as i64) {
                let idx = coeff_index(k, m);
                assert!(!seen[idx]);
                seen[idx] = true;
            }
        }
        assert!(seen.into_iter().all(|s| s));
    }

    #[test]
    fn low_degree_legendre_closed_forms() {
        let leg = Legendre::new(3);
        let theta: f64 = 0.7;
        let (t, s) = (theta.cos(), theta.sin());
        let mut p = vec![0.0; tri_len(3)];
        let mut dp = vec![0.0; tri_len(3)];
        leg.eval(t, s, &mut p, Some(&mut dp));
        let sqrt3 = 3f64.sqrt();
        assert!((p[tri_index(3, 1, 0)] - sqrt3 * t).abs() < 1e-15);
        assert!((p[tri_index(3, 1, 1)] - (1.5f64).sqrt() * s).abs() < 1e-15);
        let p20 = 5f64.sqrt() * (3.0 * t * t - 1.0) / 2.0;
        assert!((p[tri_index(3, 2, 0)] - p20).abs() < 1e-14);
        assert!((dp[tri_index(3, 1, 0)] + sqrt3 * s).abs() < 1e-14);
        assert!((dp[tri_index(3, 2, 0)] + 5f64.sqrt() * 3.0 * t * s).abs() < 1e-14);
    }

    #[test]
    fn legendre_derivative_matches_finite_differences() {
        let k_max = 12;
        let leg = Legendre::new(k_max);
        let tri = tri_len(k_max);
        let theta: f64 = 1.1;
        let h = 1e-6;
        let mut p_plus = vec![0.0; tri];
        let mut p_minus = vec![0.0; tri];
        let mut p = vec![0.0; tri];
        let mut dp = vec![0.0; tri];
        leg.eval((theta + h).cos(), (theta + h).sin(), &mut p_plus, None);
        leg.eval((theta - h).cos(), (theta - h).sin(), &mut p_minus, None);
        leg.eval(theta.cos(), theta.sin(), &mut p, Some(&mut dp));
        for idx in 0..tri {
            let fd = (p_plus[idx] - p_minus[idx]) / (2.0 * h);
            assert!(
                (fd - dp[idx]).abs() < 1e-6 * (1.0 + dp[idx].abs()),
                "{idx}: {fd} {}",
                dp[idx]
            );
        }
    }
}
