use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide error type. Variants carry enough context to point at the
/// offending input (byte offsets for parse errors, residual histories for
/// solver failures) without any backtrace machinery.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("domain error evaluating `{expr}`: {message}")]
    EvalDomain { expr: String, message: String },

    #[error("cannot differentiate: {0}")]
    Derivative(String),

    #[error("profile validation failed: {0}")]
    Validation(String),

    #[error("geometry: {0}")]
    Geometry(String),

    #[error("mesh: {0}")]
    Mesh(String),

    #[error("mesh quality gate: triangle {triangle} has minimum angle {worst_deg:.3} deg (gate {gate_deg} deg)")]
    MeshQuality {
        triangle: usize,
        worst_deg: f64,
        gate_deg: f64,
    },

    #[error("mesh budget exceeded: {requested} triangles requested, budget is {budget}")]
    MeshBudget { requested: usize, budget: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(
        "solver stalled after {iterations} iterations, relative residual {residual:.3e} \
         (history tail {tail:?})"
    )]
    NoConvergence {
        iterations: usize,
        residual: f64,
        /// Last few relative residuals, newest last.
        tail: Vec<f64>,
    },

    #[error("point ({x:.6}, {z:.6}) lies outside the mesh")]
    PointLocation { x: f64, z: f64 },

    #[error("config: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Wrap an error with a short stage label ("cell solve at x=0.25", ...).
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn io_err(path: &std::path::Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}
