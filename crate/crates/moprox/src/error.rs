//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by geometry operations, solvers, and the benchmark harness.
///
/// Contract violations (dimension mismatches, tangent vectors used at the
/// wrong base point) are programming errors and panic instead.
#[derive(Debug, Error)]
pub enum Error {
    /// Inverse retraction requested outside its domain (antipodal points for
    /// the exponential map, non-acute pairs for the projective retraction).
    #[error("inverse retraction undefined for the given pair of points")]
    AntipodalOrOutOfDomain,

    /// The differentiated-retraction transport is numerically singular at the
    /// requested step (restricted map condition number above {cond:e}).
    #[error("differentiated retraction not invertible (condition ~ {cond:e})")]
    SingularTransport { cond: f64 },

    /// An inner convex solve observed a monotone increase of its objective,
    /// which signals an inconsistent oracle (e.g. a non-convex `g`).
    #[error("inner solver diverged; a nonsmooth-term oracle is likely inconsistent")]
    NonConvexDetected,

    /// An objective evaluated to NaN or infinity during a run.
    #[error("objective returned a non-finite value at iteration {iteration}")]
    NonFiniteObjective { iteration: usize },

    /// The brute-force subproblem oracle only supports tangent dimension <= 3.
    #[error("brute-force oracle limited to tangent dimension <= 3, got {dim}")]
    DimensionTooLarge { dim: usize },

    /// Weighted proximal operator of the given nonsmooth terms is unavailable.
    #[error("no proximal operator for the requested weighted combination: {0}")]
    UnsupportedCombination(String),

    /// Configuration failed validation.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Malformed instance file.
    #[error("malformed instance file: {0}")]
    BadInstanceFile(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
