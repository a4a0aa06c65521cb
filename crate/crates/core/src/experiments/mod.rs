//! Test-map families, rigidity sweeps and grid-convergence studies.
//!
//! Every family draws its random ingredients (a Möbius map and a band-limited
//! perturbation `h` given by spherical-harmonic coefficients) from a stream
//! seeded by [`family_seed`]. The draws do not depend on ε or on the grid, so
//! a sweep evaluates the same `φ` and `h` at every ε and resolution.

mod convergence;
mod sweep;

pub use convergence::{convergence_study, Anomaly, ConvergenceRow, ConvergenceTable};
pub use sweep::{
    read_csv, run_sweep, sweep, write_csv, ExperimentConfig, OutputPaths, RowStatus, Sweep,
    SweepRow, SweepSummary,
};

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::{normalize_to_sphere, SphereMap, DEGREE_TOLERANCE};
use crate::moebius::{random_moebius_from, random_rotation, MoebiusTransform};
use crate::sphere::{ShExpansion, SphereGrid, VectorField};

/// Default `λ` range for random Möbius maps.
pub const DEFAULT_LAMBDA_RANGE: (f64, f64) = (0.25, 4.0);
/// Default top degree of the perturbation band.
pub const DEFAULT_BAND_MAX: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// A random Möbius map `R φ_{ξ,λ}`.
    ExactMoebius,
    /// `normalize(φ + ε h)`.
    PerturbedMoebius,
    /// `normalize(R(x + ε h))`.
    RotatedGraph,
    /// `normalize(φ + ε h)` with `λ` at the top of the range.
    NearBubble,
}

impl Family {
    pub const ALL: [Family; 4] = [
        Family::ExactMoebius,
        Family::PerturbedMoebius,
        Family::RotatedGraph,
        Family::NearBubble,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::ExactMoebius => "exact-moebius",
            Family::PerturbedMoebius => "perturbed-moebius",
            Family::RotatedGraph => "rotated-graph",
            Family::NearBubble => "near-bubble",
        }
    }

    pub fn ordinal(self) -> u64 {
        match self {
            Family::ExactMoebius => 0,
            Family::PerturbedMoebius => 1,
            Family::RotatedGraph => 2,
            Family::NearBubble => 3,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown family {s:?}")))
    }
}

/// SplitMix64 finalizer.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The `(ordinal + 1)`-th output of a SplitMix64 stream started at `master`.
pub fn family_seed(master: u64, family: Family) -> u64 {
    splitmix64(master.wrapping_add((family.ordinal() + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerateParams {
    pub eps: f64,
    pub lambda_range: (f64, f64),
    /// Perturbations use degrees `2..=band_max`.
    pub band_max: usize,
    /// Replaces the random Möbius map of the family.
    pub moebius: Option<MoebiusTransform>,
}

impl Default for GenerateParams {
    fn default() -> Self {
        Self {
            eps: 0.0,
            lambda_range: DEFAULT_LAMBDA_RANGE,
            band_max: DEFAULT_BAND_MAX,
            moebius: None,
        }
    }
}

impl GenerateParams {
    pub fn with_eps(eps: f64) -> Self {
        Self {
            eps,
            ..Self::default()
        }
    }
}

/// Seeded random ingredients of one family member.
#[derive(Debug, Clone)]
pub struct FamilyDraw {
    pub moebius: MoebiusTransform,
    /// Perturbation coefficients with `⨍|h|² = 1`.
    pub perturbation: ShExpansion,
}

/// Draws the Möbius map and the perturbation for `family` from `seed`.
pub fn draw(family: Family, params: &GenerateParams, seed: u64) -> Result<FamilyDraw> {
    if params.band_max < 2 {
        return Err(Error::InvalidArgument(format!(
            "band_max = {} must be at least 2",
            params.band_max
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(family_seed(seed, family));
    let (lo, hi) = params.lambda_range;
    let random = match family {
        Family::NearBubble => random_moebius_from(&mut rng, (hi, hi))?,
        Family::RotatedGraph => MoebiusTransform::from_rotation(random_rotation(&mut rng))?,
        _ => random_moebius_from(&mut rng, (lo, hi))?,
    };
    let moebius = params.moebius.unwrap_or(random);

    let mut h = ShExpansion::zeros(params.band_max, 3);
    let mut power = 0.0;
    for c in 0..3 {
        for k in 2..=params.band_max {
            let k_signed = k as i64;
            for m in -k_signed..=k_signed {
                let v: f64 = StandardNormal.sample(&mut rng);
                h.set_coefficient(c, k, m, v);
                power += v * v;
            }
        }
    }
    let scale = power.sqrt().recip();
    for c in 0..3 {
        for k in 2..=params.band_max {
            let k_signed = k as i64;
            for m in -k_signed..=k_signed {
                h.set_coefficient(c, k, m, h.coefficient(c, k, m) * scale);
            }
        }
    }
    Ok(FamilyDraw {
        moebius,
        perturbation: h,
    })
}

/// Builds a member of `family` on `grid`; the result has degree 1 within 1e−3.
pub fn generate(
    family: Family,
    params: &GenerateParams,
    grid: &Arc<SphereGrid>,
    seed: u64,
) -> Result<SphereMap> {
    let fail = |reason: String| Error::Generation {
        family: family.name().to_string(),
        n_theta: grid.n_theta(),
        reason,
    };
    if !(params.eps.is_finite() && params.eps >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "ε = {} must be finite and non-negative",
            params.eps
        )));
    }
    let d = draw(family, params, seed)?;
    let h = VectorField::from_expansion(grid.clone(), &d.perturbation)
        .map_err(|e| fail(e.to_string()))?;
    let eps = if family == Family::ExactMoebius {
        0.0
    } else {
        params.eps
    };

    let u = if eps == 0.0 {
        d.moebius.as_map(grid)
    } else {
        let base: Vec<Vector3<f64>> = match family {
            Family::RotatedGraph => grid.nodes().to_vec(),
            _ => d.moebius.as_map(grid).values().to_vec(),
        };
        let raw: Vec<Vector3<f64>> = base
            .iter()
            .zip(h.values())
            .map(|(b, hv)| b + hv * eps)
            .collect();
        let raw = VectorField::new(grid.clone(), raw)?;
        let u = normalize_to_sphere(&raw).map_err(|e| fail(e.to_string()))?;
        if family == Family::RotatedGraph {
            u.rotate(d.moebius.rotation())
        } else {
            u
        }
    };

    let degree = u.degree().map_err(|e| fail(e.to_string()))?;
    if !((degree - 1.0).abs() <= DEGREE_TOLERANCE) {
        return Err(fail(format!("computed degree {degree} is not 1")));
    }
    Ok(u)
}
