//! Plain-text map format.
//!
//! ```text
//! #spheremap v1 n_theta=<int> n_phi=<int>
//! <theta> <phi> <u1> <u2> <u3>        one line per node, grid order
//! ```
//!
//! Numbers are written with 17 significant digits, which round-trips every
//! `f64` exactly.

use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::Vector3;

use super::SphereMap;
use crate::error::{Error, Result};
use crate::sphere::SphereGrid;

pub const HEADER_TAG: &str = "#spheremap";
pub const VERSION: &str = "v1";
/// Upper bound on `n_theta * n_phi` accepted from a file.
pub const MAX_FILE_NODES: usize = 1 << 20;
/// Tolerance on the node coordinates read back from a file.
const COORD_TOLERANCE: f64 = 1e-12;

/// Parsed contents of a map file, before any grid is built.
#[derive(Debug, Clone, PartialEq)]
pub struct MapFile {
    pub n_theta: usize,
    pub n_phi: usize,
    /// `(theta, phi, u)` per node.
    pub rows: Vec<(f64, f64, Vector3<f64>)>,
}

fn parse_err(line: usize, reason: impl Into<String>) -> Error {
    Error::Parse {
        line,
        reason: reason.into(),
    }
}

fn parse_key(token: Option<&str>, key: &str, line: usize) -> Result<usize> {
    let token = token.ok_or_else(|| parse_err(line, format!("missing {key}")))?;
    let value = token
        .strip_prefix(key)
        .and_then(|rest| rest.strip_prefix('='))
        .ok_or_else(|| parse_err(line, format!("expected {key}=<int>, got {token:?}")))?;
    value
        .parse::<usize>()
        .map_err(|e| parse_err(line, format!("{key}: {e}")))
}

impl MapFile {
    pub fn from_map(map: &SphereMap) -> Self {
        let grid = map.grid();
        let mut rows = Vec::with_capacity(grid.len());
        for i in 0..grid.n_theta() {
            let theta = grid.theta(i);
            for j in 0..grid.n_phi() {
                rows.push((theta, grid.phi(j), map.values()[i * grid.n_phi() + j]));
            }
        }
        Self {
            n_theta: grid.n_theta(),
            n_phi: grid.n_phi(),
            rows,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty input"))?;
        let mut tokens = header.split_whitespace();
        if tokens.next() != Some(HEADER_TAG) {
            return Err(parse_err(1, format!("header must start with {HEADER_TAG}")));
        }
        if tokens.next() != Some(VERSION) {
            return Err(parse_err(
                1,
                format!("unsupported version (expected {VERSION})"),
            ));
        }
        let n_theta = parse_key(tokens.next(), "n_theta", 1)?;
        let n_phi = parse_key(tokens.next(), "n_phi", 1)?;
        if tokens.next().is_some() {
            return Err(parse_err(1, "trailing tokens in header"));
        }
        let expected = n_theta
            .checked_mul(n_phi)
            .filter(|&n| n <= MAX_FILE_NODES)
            .ok_or_else(|| parse_err(1, format!("grid {n_theta}x{n_phi} too large")))?;

        let mut rows = Vec::with_capacity(expected.min(text.len() / 10 + 1));
        for (idx, line) in lines {
            let lineno = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            if rows.len() == expected {
                return Err(parse_err(
                    lineno,
                    "more node lines than the header declares",
                ));
            }
            let mut nums = [0.0; 5];
            let mut fields = line.split_whitespace();
            for slot in nums.iter_mut() {
                let tok = fields
                    .next()
                    .ok_or_else(|| parse_err(lineno, "expected 5 numbers"))?;
                let v: f64 = tok
                    .parse()
                    .map_err(|e| parse_err(lineno, format!("{tok:?}: {e}")))?;
                if !v.is_finite() {
                    return Err(parse_err(lineno, format!("non-finite value {tok:?}")));
                }
                *slot = v;
            }
            if fields.next().is_some() {
                return Err(parse_err(lineno, "expected 5 numbers"));
            }
            rows.push((nums[0], nums[1], Vector3::new(nums[2], nums[3], nums[4])));
        }
        if rows.len() != expected {
            return Err(parse_err(
                text.lines().count(),
                format!("expected {expected} node lines, found {}", rows.len()),
            ));
        }
        Ok(Self {
            n_theta,
            n_phi,
            rows,
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.rows.len() * 120 + 64);
        let _ = writeln!(
            out,
            "{HEADER_TAG} {VERSION} n_theta={} n_phi={}",
            self.n_theta, self.n_phi
        );
        for (theta, phi, u) in &self.rows {
            let _ = writeln!(
                out,
                "{:.16e} {:.16e} {:.16e} {:.16e} {:.16e}",
                theta, phi, u[0], u[1], u[2]
            );
        }
        out
    }

    /// Builds the grid, checks node coordinates and unit norms.
    pub fn into_map(self) -> Result<SphereMap> {
        let grid = SphereGrid::shared(self.n_theta, self.n_phi)?;
        self.into_map_on(grid)
    }

    pub fn into_map_on(self, grid: Arc<SphereGrid>) -> Result<SphereMap> {
        if grid.n_theta() != self.n_theta || grid.n_phi() != self.n_phi {
            return Err(Error::InvalidArgument(
                "grid does not match file header".into(),
            ));
        }
        let mut values = Vec::with_capacity(self.rows.len());
        for (n, (theta, phi, u)) in self.rows.into_iter().enumerate() {
            let (i, j) = (n / grid.n_phi(), n % grid.n_phi());
            if (theta - grid.theta(i)).abs() > COORD_TOLERANCE
                || (phi - grid.phi(j)).abs() > COORD_TOLERANCE
            {
                return Err(parse_err(
                    n + 2,
                    format!("node ({theta}, {phi}) does not match grid node ({i}, {j})"),
                ));
            }
            values.push(u);
        }
        SphereMap::new(grid, values)
    }
}

impl SphereMap {
    pub fn to_file_text(&self) -> String {
        MapFile::from_map(self).to_text()
    }

    pub fn from_file_text(text: &str) -> Result<Self> {
        MapFile::parse(text)?.into_map()
    }
}
