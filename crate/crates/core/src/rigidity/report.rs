use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use super::{
    best_moebius_with, degree_expansion, distance_to_linear, explicit_constants,
    linear_coefficient, polar_decompose, regime_inverse, SearchOptions,
};
use crate::error::{Error, Result};
use crate::maps::{gradient_distance_sq, SphereMap, DEGREE_TOLERANCE};
use crate::moebius::{center_map_with, nearest_rotation, CenteringOptions, MoebiusTransform};

/// Deficits at or below this are treated as exact conformality.
pub const ZERO_DEFICIT: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportStatus {
    /// Linearized regime and closeness gate both hold: `ratio ≤ c(θ)` is guaranteed.
    Certified,
    /// Linearized regime holds but the closeness gate does not.
    OutsideGate,
    /// `det A ≤ 0` or `|A⁻¹|² > 4`; the candidate uses the nearest rotation.
    NonCertified,
    /// Deficit at or below [`ZERO_DEFICIT`]; `ratio` is not defined.
    ZeroDeficit,
    CenteringFailure,
    /// Computed degree is not within tolerance of ±1.
    DegreeMismatch,
}

impl ReportStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Certified => "certified",
            Self::OutsideGate => "outside-gate",
            Self::NonCertified => "non-certified",
            Self::ZeroDeficit => "zero-deficit",
            Self::CenteringFailure => "centering-failure",
            Self::DegreeMismatch => "degree-mismatch",
        }
    }

    pub fn is_hard_error(&self) -> bool {
        matches!(self, Self::CenteringFailure | Self::DegreeMismatch)
    }
}

impl std::fmt::Display for ReportStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ReportStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "certified" => Self::Certified,
            "outside-gate" => Self::OutsideGate,
            "non-certified" => Self::NonCertified,
            "zero-deficit" => Self::ZeroDeficit,
            "centering-failure" => Self::CenteringFailure,
            "degree-mismatch" => Self::DegreeMismatch,
            other => return Err(Error::InvalidArgument(format!("unknown status {other:?}"))),
        })
    }
}

/// Everything `analyze` measured. Optional fields are absent when an
/// earlier stage failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigidityReport {
    pub status: ReportStatus,
    pub theta: f64,
    pub c1: f64,
    pub c: f64,
    pub degree: f64,
    /// The input had degree −1 and was reflected before the analysis.
    #[serde(default)]
    pub reflected: bool,
    pub deficit: f64,
    pub psi: Option<MoebiusTransform>,
    pub centering_residual: Option<f64>,
    pub centered_deficit: Option<f64>,
    /// `⨍|∇ũ − P_T|²`.
    pub closeness_identity: Option<f64>,
    /// `⨍|∇ũ − R₀ P_T|²`, compared with θ² for the gate.
    pub closeness: Option<f64>,
    pub in_gate: bool,
    /// `D ≤ 1 + θ²`, recorded when the gate holds.
    pub trivial_bound_holds: Option<bool>,
    #[serde(rename = "A")]
    pub a: Option<[[f64; 3]; 3]>,
    #[serde(rename = "R0")]
    pub r0: Option<[[f64; 3]; 3]>,
    #[serde(rename = "detA")]
    pub det_a: Option<f64>,
    #[serde(rename = "Lambda_sq")]
    pub lambda_sq: Option<f64>,
    pub lambda_sum: Option<f64>,
    pub inverse_norm_sq: Option<f64>,
    pub w_norm_sq: Option<f64>,
    pub qv3: Option<f64>,
    pub cubic: Option<f64>,
    pub identity_residual: Option<f64>,
    pub poincare_lhs: Option<f64>,
    pub poincare_bound: Option<f64>,
    pub wente_lhs: Option<f64>,
    pub wente_rhs: Option<f64>,
    /// Candidate `R₀ ψ⁻¹`.
    pub phi: Option<MoebiusTransform>,
    /// `⨍|∇u − ∇φ|²`.
    pub lhs: Option<f64>,
    /// `lhs / deficit`; absent when the deficit is at most [`ZERO_DEFICIT`].
    pub ratio: Option<f64>,
    pub phi_optimized: Option<MoebiusTransform>,
    pub lhs_optimized: Option<f64>,
    pub message: Option<String>,
}

impl RigidityReport {
    fn empty(theta: f64, c1: f64, c: f64, degree: f64, deficit: f64) -> Self {
        Self {
            status: ReportStatus::DegreeMismatch,
            theta,
            c1,
            c,
            degree,
            reflected: false,
            deficit,
            psi: None,
            centering_residual: None,
            centered_deficit: None,
            closeness_identity: None,
            closeness: None,
            in_gate: false,
            trivial_bound_holds: None,
            a: None,
            r0: None,
            det_a: None,
            lambda_sq: None,
            lambda_sum: None,
            inverse_norm_sq: None,
            w_norm_sq: None,
            qv3: None,
            cubic: None,
            identity_residual: None,
            poincare_lhs: None,
            poincare_bound: None,
            wente_lhs: None,
            wente_rhs: None,
            phi: None,
            lhs: None,
            ratio: None,
            phi_optimized: None,
            lhs_optimized: None,
            message: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            reason: e.to_string(),
        })
    }

    /// Whether the certified bound `ratio ≤ c` holds (vacuously for other statuses).
    pub fn bound_respected(&self) -> bool {
        match (self.status, self.ratio) {
            (ReportStatus::Certified, Some(r)) => r <= self.c,
            _ => true,
        }
    }
}

fn rows(m: &Matrix3<f64>) -> [[f64; 3]; 3] {
    [
        [m[(0, 0)], m[(0, 1)], m[(0, 2)]],
        [m[(1, 0)], m[(1, 1)], m[(1, 2)]],
        [m[(2, 0)], m[(2, 1)], m[(2, 2)]],
    ]
}

#[derive(Debug, Clone, Default)]
pub struct AnalyzeOptions {
    pub centering: CenteringOptions,
    /// Also run [`best_moebius`](super::best_moebius) from the candidate.
    pub optimize: Option<SearchOptions>,
}

/// Runs the pipeline on a degree-1 map with default options.
pub fn analyze(u: &SphereMap, theta: f64) -> Result<RigidityReport> {
    analyze_with(u, theta, &AnalyzeOptions::default())
}

/// Degree ±1: a degree −1 map is reflected first (and `reflected` is set).
pub fn analyze_signed(u: &SphereMap, theta: f64, opts: &AnalyzeOptions) -> Result<RigidityReport> {
    let degree = u.degree()?;
    if (degree + 1.0).abs() <= DEGREE_TOLERANCE {
        let mut report = analyze_with(&u.reflect(), theta, opts)?;
        report.reflected = true;
        report.degree = degree;
        return Ok(report);
    }
    analyze_with(u, theta, opts)
}

/// Center, linearize, build `φ = R₀ψ⁻¹`, and measure `⨍|∇u − ∇φ|²`.
///
/// Pipeline failures (degree, centering, regime) are reported through
/// [`RigidityReport::status`]; `Err` is reserved for invalid inputs such as
/// θ outside its admissible range.
pub fn analyze_with(u: &SphereMap, theta: f64, opts: &AnalyzeOptions) -> Result<RigidityReport> {
    let constants = explicit_constants(theta)?;
    let degree = u.degree()?;
    let deficit = u.deficit()?;
    let mut report = RigidityReport::empty(theta, constants.c1, constants.c, degree, deficit);

    if !((degree - 1.0).abs() <= DEGREE_TOLERANCE) {
        report.message = Some(format!("computed degree {degree} is not 1"));
        return Ok(report);
    }

    let centering = match center_map_with(u, &opts.centering) {
        Ok(c) => c,
        Err(e) => {
            report.status = ReportStatus::CenteringFailure;
            report.message = Some(e.to_string());
            return Ok(report);
        }
    };
    report.psi = Some(centering.psi);
    report.centering_residual = Some(centering.residual.norm());
    let psi = centering.psi;
    let centered = if psi.is_rotation() {
        u.clone()
    } else {
        u.precompose(|x| psi.apply(x))?
    };
    let centered_deficit = centered.deficit()?;
    report.centered_deficit = Some(centered_deficit);
    report.closeness_identity = Some(distance_to_linear(&centered, &Matrix3::identity())?);

    let a = linear_coefficient(&centered)?;
    report.a = Some(rows(&a));
    report.det_a = Some(a.determinant());

    let mut in_regime = true;
    let r0 = match polar_decompose(&a) {
        Ok(polar) => {
            report.lambda_sq = Some(polar.lambda_sq);
            report.lambda_sum = Some(polar.lambda_sum);
            polar.r0
        }
        Err(e) => {
            in_regime = false;
            report.message = Some(e.to_string());
            nearest_rotation(&a)
        }
    };
    report.r0 = Some(rows(&r0));
    let closeness = distance_to_linear(&centered, &r0)?;
    report.closeness = Some(closeness);
    report.in_gate = closeness <= theta * theta;
    if report.in_gate {
        report.trivial_bound_holds = Some(deficit <= 1.0 + theta * theta);
    }

    match regime_inverse(&a) {
        Ok(inv) => {
            report.inverse_norm_sq = Some(inv.norm_squared());
            let expansion = degree_expansion(&centered, &a)?;
            report.w_norm_sq = Some(expansion.w_norm_sq);
            report.qv3 = Some(expansion.qv3);
            report.cubic = Some(expansion.cubic);
            report.identity_residual = Some(expansion.residual);
            report.wente_lhs = Some(expansion.cubic.abs());
            report.wente_rhs = Some((0.5 * expansion.w_norm_sq).powf(1.5));
        }
        Err(e) => {
            in_regime = false;
            report.inverse_norm_sq = a.try_inverse().map(|m| m.norm_squared());
            report.message.get_or_insert_with(|| e.to_string());
        }
    }
    report.poincare_lhs = Some(distance_to_linear(&centered, &a)?);
    report.poincare_bound = Some(3.0 * centered_deficit);

    let phi = MoebiusTransform::from_rotation(r0)?.compose(&psi.inverse())?;
    let lhs = gradient_distance_sq(u, &phi.as_map(u.grid()))?;
    report.phi = Some(phi);
    report.lhs = Some(lhs);
    if deficit > ZERO_DEFICIT {
        report.ratio = Some(lhs / deficit);
    }

    if let Some(search) = &opts.optimize {
        let best = best_moebius_with(u, &phi, search)?;
        report.lhs_optimized = Some(gradient_distance_sq(u, &best.as_map(u.grid()))?);
        report.phi_optimized = Some(best);
    }

    report.status = if deficit <= ZERO_DEFICIT {
        ReportStatus::ZeroDeficit
    } else if !in_regime {
        ReportStatus::NonCertified
    } else if report.in_gate {
        ReportStatus::Certified
    } else {
        ReportStatus::OutsideGate
    };
    Ok(report)
}
