use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("non-triangle face {face} with {arity} vertices")]
    NonTriangleFace { face: usize, arity: usize },

    #[error("invalid face {face}: {reason}")]
    InvalidFace { face: usize, reason: String },

    #[error("boundary or non-manifold edge ({}, {}) has {count} incident faces, expected 2", .edge[0], .edge[1])]
    BoundaryEdge { edge: [usize; 2], count: usize },

    #[error("vertex {vertex} is not used by any face")]
    IsolatedVertex { vertex: usize },

    #[error("mesh is disconnected ({components} face components)")]
    Disconnected { components: usize },

    #[error("unsupported geometry: {0}")]
    UnsupportedGeometry(String),

    #[error("invalid weights: {0}")]
    Weights(String),

    #[error("invalid metric on edge ({}, {}): {reason}", .edge[0], .edge[1])]
    InvalidMetric { edge: [usize; 2], reason: String },

    #[error("domain exit at vertex {vertex}: u = {u} must stay negative on circle-packing vertices in hyperbolic geometry")]
    DomainExit { vertex: usize, u: f64 },

    #[error("essential singularity: |u|_inf = {norm} exceeds {limit}")]
    Escape { norm: f64, limit: f64 },

    #[error("adaptive step fell below {min_h:e} with local error {error:e}")]
    StepCollapse { min_h: f64, error: f64 },

    #[error("face {face} is not admissible (triangle inequality fails); use the extended angles")]
    Inadmissible { face: usize },

    #[error("numerical inconsistency: {0}")]
    Numerical(String),

    #[error("quadrature did not converge on face {face}")]
    Quadrature { face: usize },

    #[error("newton solver exceeded {iterations} iterations (residual {residual:e})")]
    MaxIterations { iterations: usize, residual: f64 },

    #[error("hessian is singular beyond the gauge kernel")]
    SingularHessian,

    #[error("gauge required: euclidean problem with alpha * target identically zero has a constant-shift kernel")]
    GaugeRequired,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
