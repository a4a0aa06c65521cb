use thiserror::Error;

/// Errors raised by the sphere toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("degenerate map: near-zero vector ({norm:e}) at node {node}")]
    DegenerateMap { node: usize, norm: f64 },

    #[error("point within {distance:e} of the projection pole")]
    ProjectionPole { distance: f64 },

    #[error("representation error: parameter recovery residual {residual:e}")]
    Representation { residual: f64 },

    #[error("centering failed after {restarts} restarts (best residual {best_residual:e})")]
    CenteringFailure { restarts: usize, best_residual: f64 },

    #[error("out of regime: {0}")]
    OutOfRegime(String),

    #[error("generation error for family {family} at n_theta={n_theta}: {reason}")]
    Generation {
        family: String,
        n_theta: usize,
        reason: String,
    },

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
