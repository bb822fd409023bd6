//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors reported by manifold operations, calculus, and solvers.
#[derive(Debug, Error)]
pub enum GrassmannError {
    /// Dimensions are inconsistent or out of range.
    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),

    /// Two arguments that must live on the same manifold (or at the same
    /// base point) do not.
    #[error("mismatched arguments: {0}")]
    Mismatch(String),

    /// A matrix claimed to be an involution point violates its invariants.
    #[error("matrix is not an involution point: {what} deviates by {deviation:.3e}")]
    NotInvolution { what: &'static str, deviation: f64 },

    /// A matrix that must be orthogonal is not.
    #[error("matrix is not orthogonal: deviation {deviation:.3e}")]
    NotOrthogonal { deviation: f64 },

    /// Input of `project_tangent_normal` is not of the form Q·(skew).
    #[error("matrix is not tangent to the orthogonal group at Q: skewness deviates by {deviation:.3e}")]
    NotOrthogonalTangent { deviation: f64 },

    /// An eigenvalue gap required for a unique answer is too small.
    #[error("degenerate eigenvalue gap {gap:.3e} at split position {position}")]
    DegenerateGap { position: usize, gap: f64 },

    /// A full-rank coset representative is numerically rank deficient.
    #[error("matrix is rank deficient: relative smallest singular value {ratio:.3e}")]
    RankDeficient { ratio: f64 },

    /// The endpoints are at or beyond the cut locus; no unique connecting
    /// geodesic exists.
    #[error("points are at or beyond the cut locus: largest principal angle {theta_max:.12} rad")]
    CutLocus { theta_max: f64 },

    /// The Givens splitting was requested outside its accuracy range.
    #[error("splitting exponential requested at block norm {norm:.3e}, above the maximum {max:.3e}")]
    SplittingNormExceeded { norm: f64, max: f64 },

    /// The objective does not provide a callback that the operation needs.
    #[error("objective does not provide {0}")]
    MissingCallback(&'static str),

    /// A linear system required by a solver step could not be solved.
    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    /// A line search direction is not a descent direction.
    #[error("not a descent direction: directional derivative {derivative:.3e}")]
    NotDescent { derivative: f64 },

    /// The backtracking line search ran out of trials.
    #[error("line search exhausted after {backtracks} backtracking steps")]
    LineSearchExhausted { backtracks: usize },

    /// Solver configuration is inconsistent.
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    /// An error occurred at a specific solver iteration.
    #[error("at iteration {iter}: {source}")]
    AtIteration {
        iter: usize,
        #[source]
        source: Box<GrassmannError>,
    },

    /// A matrix file could not be parsed.
    #[error("matrix file parse error: {0}")]
    ParseMatrix(String),

    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl GrassmannError {
    /// Wraps an error with the solver iteration at which it occurred.
    pub fn at_iteration(self, iter: usize) -> Self {
        GrassmannError::AtIteration {
            iter,
            source: Box::new(self),
        }
    }
}
