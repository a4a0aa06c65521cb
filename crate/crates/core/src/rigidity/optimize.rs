use nalgebra::{Matrix3, Rotation3, Vector3};

use crate::error::Result;
use crate::maps::{gradient_distance_sq, SphereMap};
use crate::moebius::{tangent_basis, MoebiusTransform};

/// Derivative-free local search over the Möbius group.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    /// Initial step in each chart coordinate.
    pub initial_step: f64,
    /// Stop once the step falls below this.
    pub min_step: f64,
    pub max_evaluations: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            initial_step: 0.05,
            min_step: 1e-7,
            max_evaluations: 600,
        }
    }
}

/// Chart around a base transform `R φ_{ξ,λ}`:
/// `p ↦ exp(ω) R φ_{ξ(a,b), λ e^ℓ}` with `p = (ω, a, b, ℓ)`.
struct Chart {
    rotation: Matrix3<f64>,
    xi: Vector3<f64>,
    e1: Vector3<f64>,
    e2: Vector3<f64>,
    lambda: f64,
}

impl Chart {
    fn new(base: &MoebiusTransform) -> Self {
        let xi = *base.xi();
        let (e1, e2) = tangent_basis(&xi);
        Self {
            rotation: *base.rotation(),
            xi,
            e1,
            e2,
            lambda: base.lambda(),
        }
    }

    fn point(&self, p: &[f64; 6]) -> Result<MoebiusTransform> {
        let omega = Rotation3::new(Vector3::new(p[0], p[1], p[2])).into_inner();
        let xi = (self.xi + self.e1 * p[3] + self.e2 * p[4]).normalize();
        MoebiusTransform::new(omega * self.rotation, xi, self.lambda * p[5].exp())
    }
}

struct Objective<'a> {
    u: &'a SphereMap,
    chart: Chart,
    evaluations: usize,
}

impl Objective<'_> {
    fn eval(&mut self, p: &[f64; 6]) -> f64 {
        self.evaluations += 1;
        self.chart
            .point(p)
            .and_then(|m| gradient_distance_sq(self.u, &m.as_map(self.u.grid())))
            .unwrap_or(f64::INFINITY)
    }
}

/// Locally minimizes `⨍|∇u − ∇φ|²` over Möbius maps `φ`, starting from `initial`.
pub fn best_moebius(u: &SphereMap, initial: &MoebiusTransform) -> Result<MoebiusTransform> {
    best_moebius_with(u, initial, &SearchOptions::default())
}

/// Like [`best_moebius`]; the result never scores worse than `initial`.
pub fn best_moebius_with(
    u: &SphereMap,
    initial: &MoebiusTransform,
    opts: &SearchOptions,
) -> Result<MoebiusTransform> {
    let mut obj = Objective {
        u,
        chart: Chart::new(initial),
        evaluations: 0,
    };
    let mut p = [0.0; 6];
    let mut best = obj.eval(&p);
    let start = best;
    let mut step = opts.initial_step;

    while step >= opts.min_step && obj.evaluations < opts.max_evaluations {
        let before = p;
        let mut improved = false;
        for i in 0..6 {
            let mut lo = p;
            lo[i] -= step;
            let mut hi = p;
            hi[i] += step;
            let (f_lo, f_hi) = (obj.eval(&lo), obj.eval(&hi));
            let curvature = f_lo + f_hi - 2.0 * best;
            let mut candidate = if f_lo < f_hi { (lo, f_lo) } else { (hi, f_hi) };
            if curvature > 0.0 {
                let offset = 0.5 * step * (f_lo - f_hi) / curvature;
                if offset.abs() <= 4.0 * step {
                    let mut q = p;
                    q[i] += offset;
                    let f_q = obj.eval(&q);
                    if f_q < candidate.1 {
                        candidate = (q, f_q);
                    }
                }
            }
            if candidate.1 < best {
                p = candidate.0;
                best = candidate.1;
                improved = true;
            }
        }
        if improved {
            let mut jump = p;
            for i in 0..6 {
                jump[i] += p[i] - before[i];
            }
            let f_jump = obj.eval(&jump);
            if f_jump < best {
                p = jump;
                best = f_jump;
            }
        } else {
            step *= 0.25;
        }
    }

    if best < start {
        Ok(obj.chart.point(&p)?.canonical())
    } else {
        Ok(*initial)
    }
}
