use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{generate, Family, GenerateParams, DEFAULT_BAND_MAX, DEFAULT_LAMBDA_RANGE};
use crate::error::{Error, Result};
use crate::moebius::RANDOM_LAMBDA_BOUNDS;
use crate::rigidity::{
    analyze_with, explicit_constants, AnalyzeOptions, ReportStatus, RigidityReport, DEFAULT_THETA,
};
use crate::sphere::SphereGrid;

fn default_theta() -> f64 {
    DEFAULT_THETA
}

fn default_lambda_range() -> (f64, f64) {
    DEFAULT_LAMBDA_RANGE
}

fn default_band_max() -> usize {
    DEFAULT_BAND_MAX
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    #[serde(default)]
    pub csv: Option<PathBuf>,
    /// Directory receiving one report JSON per row.
    #[serde(default)]
    pub reports: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// `n_theta` values, strictly increasing; `n_phi = 2 n_theta`.
    pub grids: Vec<usize>,
    pub families: Vec<Family>,
    /// Strictly decreasing positive amplitudes.
    pub eps: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default = "default_lambda_range")]
    pub lambda_range: (f64, f64),
    #[serde(default = "default_band_max")]
    pub band_max: usize,
    #[serde(default)]
    pub output: OutputPaths,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            reason: e.to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.grids.is_empty() || self.families.is_empty() || self.eps.is_empty() {
            return bad("grids, families and eps must be non-empty".into());
        }
        if self.grids.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!(
                "grid sizes {:?} must be strictly increasing",
                self.grids
            ));
        }
        if self.grids[0] < 4 {
            return bad(format!("grid size {} is below 4", self.grids[0]));
        }
        if self.eps.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return bad(format!("ε values {:?} must be positive", self.eps));
        }
        if self.eps.windows(2).any(|w| w[0] <= w[1]) {
            return bad(format!(
                "ε values {:?} must be strictly decreasing",
                self.eps
            ));
        }
        let mut families = self.families.clone();
        families.sort();
        families.dedup();
        if families.len() != self.families.len() {
            return bad("families must not repeat".into());
        }
        explicit_constants(self.theta)?;
        let (lo, hi) = self.lambda_range;
        let (min, max) = RANDOM_LAMBDA_BOUNDS;
        if !(lo >= min && hi <= max && lo <= hi) {
            return bad(format!(
                "λ range [{lo}, {hi}] must lie inside [{min}, {max}]"
            ));
        }
        if self.band_max < 2 || self.band_max > self.grids[0].saturating_sub(2) {
            return bad(format!(
                "band_max = {} must lie in 2..={} for the coarsest grid",
                self.band_max,
                self.grids[0].saturating_sub(2)
            ));
        }
        Ok(())
    }

    fn params(&self, eps: f64) -> GenerateParams {
        GenerateParams {
            eps,
            lambda_range: self.lambda_range,
            band_max: self.band_max,
            moebius: None,
        }
    }
}

/// Outcome of one sweep row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowStatus {
    Report(ReportStatus),
    GenerationError,
    AnalysisError,
}

impl RowStatus {
    pub fn is_hard_error(&self) -> bool {
        match self {
            RowStatus::Report(s) => s.is_hard_error(),
            _ => true,
        }
    }
}

impl fmt::Display for RowStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RowStatus::Report(s) => f.write_str(s.as_str()),
            RowStatus::GenerationError => f.write_str("generation-error"),
            RowStatus::AnalysisError => f.write_str("analysis-error"),
        }
    }
}

impl FromStr for RowStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "generation-error" => Ok(RowStatus::GenerationError),
            "analysis-error" => Ok(RowStatus::AnalysisError),
            other => other.parse().map(RowStatus::Report),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub family: Family,
    pub eps: f64,
    pub n_theta: usize,
    pub deficit: Option<f64>,
    pub lhs: Option<f64>,
    /// Empty for zero-deficit rows.
    pub ratio: Option<f64>,
    pub identity_residual: Option<f64>,
    pub status: RowStatus,
    pub in_gate: bool,
}

impl SweepRow {
    pub fn from_report(family: Family, eps: f64, report: &RigidityReport, n_theta: usize) -> Self {
        Self {
            family,
            eps,
            n_theta,
            deficit: Some(report.deficit),
            lhs: report.lhs,
            ratio: report.ratio,
            identity_residual: report.identity_residual,
            status: RowStatus::Report(report.status),
            in_gate: report.in_gate,
        }
    }

    fn failed(family: Family, eps: f64, n_theta: usize, status: RowStatus) -> Self {
        Self {
            family,
            eps,
            n_theta,
            deficit: None,
            lhs: None,
            ratio: None,
            identity_residual: None,
            status,
            in_gate: false,
        }
    }
}

/// Rows in (family, ε, grid) order with the matching reports.
#[derive(Debug, Clone)]
pub struct Sweep {
    pub config: ExperimentConfig,
    pub rows: Vec<SweepRow>,
    pub reports: Vec<Option<RigidityReport>>,
    /// Error text for failed rows, aligned with `rows`.
    pub messages: Vec<Option<String>>,
}

/// Runs the sweep and returns the rows only.
pub fn sweep(config: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    Ok(run_sweep(config)?.rows)
}

/// Generates and analyzes every (family, ε, grid) triple. Per-row failures
/// are recorded in the row status.
pub fn run_sweep(config: &ExperimentConfig) -> Result<Sweep> {
    config.validate()?;
    let grids = config
        .grids
        .iter()
        .map(|n| SphereGrid::with_resolution(*n))
        .collect::<Result<Vec<_>>>()?;
    let opts = AnalyzeOptions::default();
    let mut out = Sweep {
        config: config.clone(),
        rows: Vec::new(),
        reports: Vec::new(),
        messages: Vec::new(),
    };
    for &family in &config.families {
        for &eps in &config.eps {
            let params = config.params(eps);
            for grid in &grids {
                let n = grid.n_theta();
                let (row, report, message) = match generate(family, &params, grid, config.seed) {
                    Err(e) => (
                        SweepRow::failed(family, eps, n, RowStatus::GenerationError),
                        None,
                        Some(e.to_string()),
                    ),
                    Ok(u) => match analyze_with(&u, config.theta, &opts) {
                        Ok(r) => (SweepRow::from_report(family, eps, &r, n), Some(r), None),
                        Err(e) => (
                            SweepRow::failed(family, eps, n, RowStatus::AnalysisError),
                            None,
                            Some(e.to_string()),
                        ),
                    },
                };
                out.rows.push(row);
                out.reports.push(report);
                out.messages.push(message);
            }
        }
    }
    Ok(out)
}

/// Maxima of the ratio column.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub theta: f64,
    pub c: f64,
    pub max_ratio_per_family: Vec<(Family, Option<f64>)>,
    pub max_ratio_in_gate: Option<f64>,
    pub max_ratio_outside_gate: Option<f64>,
    pub hard_errors: usize,
    /// In-gate certified rows whose ratio exceeds `c`.
    pub bound_violations: usize,
}

fn fmax(acc: Option<f64>, v: Option<f64>) -> Option<f64> {
    match (acc, v) {
        (Some(a), Some(b)) => Some(a.max(b)),
        (a, b) => a.or(b),
    }
}

impl SweepSummary {
    pub fn new(rows: &[SweepRow], theta: f64) -> Result<Self> {
        let c = explicit_constants(theta)?.c;
        let mut families: Vec<Family> = rows.iter().map(|r| r.family).collect();
        families.dedup();
        let max_ratio_per_family = families
            .iter()
            .map(|f| {
                let m = rows
                    .iter()
                    .filter(|r| r.family == *f)
                    .fold(None, |acc, r| fmax(acc, r.ratio));
                (*f, m)
            })
            .collect();
        let regime = |gate: bool| {
            rows.iter()
                .filter(|r| r.in_gate == gate)
                .fold(None, |acc, r| fmax(acc, r.ratio))
        };
        Ok(Self {
            theta,
            c,
            max_ratio_per_family,
            max_ratio_in_gate: regime(true),
            max_ratio_outside_gate: regime(false),
            hard_errors: rows.iter().filter(|r| r.status.is_hard_error()).count(),
            bound_violations: rows
                .iter()
                .filter(|r| {
                    r.status == RowStatus::Report(ReportStatus::Certified)
                        && r.ratio.is_some_and(|x| x > c)
                })
                .count(),
        })
    }

    /// 0 when clean, 1 when a certified row exceeds `c`, 2 on hard errors.
    pub fn exit_code(&self) -> i32 {
        if self.hard_errors > 0 {
            2
        } else if self.bound_violations > 0 {
            1
        } else {
            0
        }
    }
}

impl fmt::Display for SweepSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.6e}"));
        writeln!(f, "theta = {}, c(theta) = {:.6}", self.theta, self.c)?;
        for (family, m) in &self.max_ratio_per_family {
            writeln!(f, "max ratio [{family}] = {}", show(*m))?;
        }
        writeln!(f, "max ratio [in gate] = {}", show(self.max_ratio_in_gate))?;
        writeln!(
            f,
            "max ratio [outside gate] = {}",
            show(self.max_ratio_outside_gate)
        )?;
        writeln!(f, "hard errors = {}", self.hard_errors)?;
        write!(f, "bound violations = {}", self.bound_violations)
    }
}

const HEADER: [&str; 9] = [
    "family",
    "eps",
    "n_theta",
    "deficit",
    "lhs",
    "ratio",
    "identity_residual",
    "status",
    "in_gate",
];

fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn format_opt(v: Option<f64>) -> String {
    v.map(format_float).unwrap_or_default()
}

/// CSV with a header row; floats carry 17 significant digits.
pub fn write_csv(rows: &[SweepRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(HEADER).expect("in-memory write");
    for r in rows {
        w.write_record([
            r.family.name().to_string(),
            format_float(r.eps),
            r.n_theta.to_string(),
            format_opt(r.deficit),
            format_opt(r.lhs),
            format_opt(r.ratio),
            format_opt(r.identity_residual),
            r.status.to_string(),
            r.in_gate.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

/// Parses the output of [`write_csv`].
pub fn read_csv(text: &str) -> Result<Vec<SweepRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let parse_err = |line: usize, reason: String| Error::Parse { line, reason };
    let header = reader
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    if header.iter().ne(HEADER.iter().copied()) {
        return Err(parse_err(1, format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| parse_err(line, e.to_string()))?;
        if record.len() != HEADER.len() {
            return Err(parse_err(line, format!("expected {} fields", HEADER.len())));
        }
        let float = |s: &str| -> Result<f64> {
            let v: f64 = s
                .parse()
                .map_err(|_| parse_err(line, format!("invalid number {s:?}")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(parse_err(line, format!("non-finite number {s:?}")))
            }
        };
        let opt = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                float(s).map(Some)
            }
        };
        let family = record[0]
            .parse()
            .map_err(|e: Error| parse_err(line, e.to_string()))?;
        let n_theta = record[2]
            .parse()
            .map_err(|_| parse_err(line, format!("invalid grid size {:?}", &record[2])))?;
        let status = record[7]
            .parse()
            .map_err(|e: Error| parse_err(line, e.to_string()))?;
        let in_gate = record[8]
            .parse()
            .map_err(|_| parse_err(line, format!("invalid flag {:?}", &record[8])))?;
        rows.push(SweepRow {
            family,
            eps: float(&record[1])?,
            n_theta,
            deficit: opt(&record[3])?,
            lhs: opt(&record[4])?,
            ratio: opt(&record[5])?,
            identity_residual: opt(&record[6])?,
            status,
            in_gate,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config() -> ExperimentConfig {
        ExperimentConfig::from_json(
            r#"{"grids": [12, 16], "families": ["perturbed-moebius"], "eps": [0.1, 0.05]}"#,
        )
        .unwrap()
    }

    #[test]
    fn defaults_fill_in() {
        let c = config();
        assert_eq!(c.theta, DEFAULT_THETA);
        assert_eq!(c.lambda_range, DEFAULT_LAMBDA_RANGE);
        assert_eq!(c.seed, 0);
        assert_eq!(ExperimentConfig::from_json(&c.to_json()).unwrap(), c);
    }

    #[test]
    fn invalid_configs_rejected() {
        for text in [
            r#"{"grids": [16, 12], "families": ["exact-moebius"], "eps": [0.1]}"#,
            r#"{"grids": [12], "families": ["exact-moebius"], "eps": [0.05, 0.1]}"#,
            r#"{"grids": [12], "families": ["exact-moebius"], "eps": [-0.1]}"#,
            r#"{"grids": [12], "families": [], "eps": [0.1]}"#,
            r#"{"grids": [12], "families": ["exact-moebius"], "eps": [0.1], "theta": 2.0}"#,
            r#"{"grids": [12], "families": ["exact-moebius"], "eps": [0.1], "bogus": 1}"#,
            r#"{"grids": [12], "families": ["nope"], "eps": [0.1]}"#,
        ] {
            assert!(ExperimentConfig::from_json(text).is_err(), "{text}");
        }
    }

    #[test]
    fn csv_round_trip() {
        let rows = vec![
            SweepRow {
                family: Family::PerturbedMoebius,
                eps: 0.1,
                n_theta: 24,
                deficit: Some(0.012345678901234567),
                lhs: Some(1.0 / 3.0),
                ratio: Some(27.0),
                identity_residual: Some(1e-15),
                status: RowStatus::Report(ReportStatus::Certified),
                in_gate: true,
            },
            SweepRow::failed(Family::NearBubble, 0.05, 24, RowStatus::GenerationError),
        ];
        let text = write_csv(&rows);
        assert!(text.starts_with("family,eps,n_theta,"));
        assert_eq!(read_csv(&text).unwrap(), rows);
    }

    #[test]
    fn csv_rejects_garbage() {
        assert!(read_csv("a,b\n1,2\n").is_err());
        let good = write_csv(&[SweepRow::failed(
            Family::ExactMoebius,
            0.1,
            12,
            RowStatus::AnalysisError,
        )]);
        assert!(read_csv(&good.replace("analysis-error", "mystery")).is_err());
        assert!(read_csv(&good.replace("1.0000000000000001e-1", "NaN")).is_err());
    }

    #[test]
    fn summary_exit_codes() {
        let mut row = SweepRow::failed(
            Family::ExactMoebius,
            0.1,
            12,
            RowStatus::Report(ReportStatus::Certified),
        );
        row.ratio = Some(1e6);
        row.in_gate = true;
        let s = SweepSummary::new(&[row.clone()], 0.1).unwrap();
        assert_eq!(s.exit_code(), 1);
        row.ratio = Some(1.0);
        assert_eq!(
            SweepSummary::new(&[row.clone()], 0.1).unwrap().exit_code(),
            0
        );
        row.status = RowStatus::GenerationError;
        assert_eq!(SweepSummary::new(&[row], 0.1).unwrap().exit_code(), 2);
    }
}
