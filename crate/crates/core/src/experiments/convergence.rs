use std::fmt;

use super::{generate, Family, GenerateParams};
use crate::error::{Error, Result};
use crate::rigidity::{analyze_with, AnalyzeOptions};
use crate::sphere::SphereGrid;

/// Residuals below this are treated as converged.
pub const RESIDUAL_FLOOR: f64 = 1e-10;
/// Residuals above this mark a grid as under-resolved.
pub const RESOLVED_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n_theta: usize,
    /// `|deg u − 1|`.
    pub degree_residual: Option<f64>,
    pub identity_residual: Option<f64>,
    pub deficit: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Anomaly {
    /// A residual grew from one grid to the next.
    NonMonotone {
        quantity: &'static str,
        n_theta: usize,
        previous: f64,
        value: f64,
    },
    UnderResolved {
        n_theta: usize,
        reason: String,
    },
}

impl fmt::Display for Anomaly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Anomaly::NonMonotone {
                quantity,
                n_theta,
                previous,
                value,
            } => write!(
                f,
                "non-monotone {quantity} at n_theta={n_theta}: {previous:e} -> {value:e}"
            ),
            Anomaly::UnderResolved { n_theta, reason } => {
                write!(f, "under-resolved at n_theta={n_theta}: {reason}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub family: Family,
    pub rows: Vec<ConvergenceRow>,
    pub anomalies: Vec<Anomaly>,
}

impl ConvergenceTable {
    pub fn to_csv(&self) -> String {
        let cell = |v: Option<f64>| v.map(|x| format!("{x:.16e}")).unwrap_or_default();
        let mut s = String::from("n_theta,degree_residual,identity_residual,deficit\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{}\n",
                r.n_theta,
                cell(r.degree_residual),
                cell(r.identity_residual),
                cell(r.deficit)
            ));
        }
        s
    }
}

/// Generates the same family member on each grid and tabulates its
/// quadrature residuals. Residuals must shrink under refinement until they
/// reach [`RESIDUAL_FLOOR`]; for `exact-moebius` the deficit counts as a
/// residual too.
pub fn convergence_study(
    family: Family,
    params: &GenerateParams,
    grids: &[usize],
    seed: u64,
    theta: f64,
) -> Result<ConvergenceTable> {
    if grids.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "a convergence study needs at least 3 grids, got {}",
            grids.len()
        )));
    }
    if grids.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(format!(
            "grid sizes {grids:?} must be strictly increasing"
        )));
    }
    let opts = AnalyzeOptions::default();
    let mut rows = Vec::with_capacity(grids.len());
    let mut anomalies = Vec::new();
    for &n in grids {
        let grid = SphereGrid::with_resolution(n)?;
        let mut row = ConvergenceRow {
            n_theta: n,
            degree_residual: None,
            identity_residual: None,
            deficit: None,
            error: None,
        };
        match generate(family, params, &grid, seed) {
            Err(e) => row.error = Some(e.to_string()),
            Ok(u) => {
                let report = analyze_with(&u, theta, &opts)?;
                row.degree_residual = Some((report.degree - 1.0).abs());
                row.deficit = Some(report.deficit);
                row.identity_residual = report.identity_residual;
                if report.identity_residual.is_none() {
                    row.error = Some(format!(
                        "no identity residual ({})",
                        report.message.as_deref().unwrap_or(report.status.as_str())
                    ));
                }
            }
        }
        let worst = [row.degree_residual, row.identity_residual]
            .into_iter()
            .flatten()
            .fold(0.0, f64::max);
        if let Some(e) = &row.error {
            anomalies.push(Anomaly::UnderResolved {
                n_theta: n,
                reason: e.clone(),
            });
        } else if worst > RESOLVED_TOLERANCE {
            anomalies.push(Anomaly::UnderResolved {
                n_theta: n,
                reason: format!("residual {worst:e} exceeds {RESOLVED_TOLERANCE:e}"),
            });
        }
        rows.push(row);
    }

    let mut check = |quantity: &'static str, get: &dyn Fn(&ConvergenceRow) -> Option<f64>| {
        for pair in rows.windows(2) {
            if let (Some(prev), Some(value)) = (get(&pair[0]), get(&pair[1])) {
                if value > prev && value > RESIDUAL_FLOOR {
                    anomalies.push(Anomaly::NonMonotone {
                        quantity,
                        n_theta: pair[1].n_theta,
                        previous: prev,
                        value,
                    });
                }
            }
        }
    };
    check("degree residual", &|r| r.degree_residual);
    check("identity residual", &|r| r.identity_residual);
    if family == Family::ExactMoebius {
        check("deficit", &|r| r.deficit.map(f64::abs));
    }

    Ok(ConvergenceTable {
        family,
        rows,
        anomalies,
    })
}
