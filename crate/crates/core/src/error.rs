use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid norm: {0}")]
    InvalidNorm(String),

    #[error("parse error at {path}: {reason}")]
    Parse { path: String, reason: String },

    #[error("degenerate section: spanning vectors are (nearly) dependent")]
    DegenerateSection,

    #[error("{0} must be non-zero")]
    ZeroVector(&'static str),

    #[error("coincident points: {0}")]
    CoincidentPoints(&'static str),

    #[error("point has Euclidean norm {norm} < 1; no tangent line to the unit circle exists")]
    InsideUnitCircle { norm: f64 },

    #[error("point is not on the unit sphere (norm {norm})")]
    OffSphere { norm: f64 },

    #[error("point is not on the Euclidean unit circle (norm {norm})")]
    OffCircle { norm: f64 },

    #[error("arc length did not converge within {segments} segments (bracket [{lower}, {upper}])")]
    NonConvergence {
        lower: f64,
        upper: f64,
        segments: usize,
    },

    #[error("John ellipse solver did not converge after {iterations} iterations (best log det {best_log_det})")]
    SolverNonConvergence {
        iterations: usize,
        best_log_det: f64,
        best_m: [[f64; 2]; 2],
    },

    #[error("norm is not normalized: inradius {inradius} < 1 (unit disk not contained in unit ball)")]
    NotNormalized { inradius: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
