//! Grassmannian geometry and optimization in the involution model.
//!
//! A point of the Grassmannian Gr(k, n) is represented by the symmetric
//! orthogonal matrix `Q` with trace `2k - n` whose +1-eigenspace is the
//! subspace in question. Working directly with `Q` (and a cached orthogonal
//! eigenbasis `V` with `Q = V·I_{k,n-k}·Vᵀ`) gives closed-form geodesics,
//! logarithms, parallel transport, gradients, and Hessians, all expressed
//! through small `k×(n-k)` "effective" blocks.
//!
//! The crate provides:
//!
//! - [`point`]: the manifold representation, eigenbasis extraction via
//!   column-pivoted QR, projection onto the manifold, seeded random points;
//! - [`model`]: conversion to and from other common Grassmannian coordinates
//!   (orthogonal matrices, Stiefel frames, full-rank bases, projectors);
//! - [`expm`]: the structured exponential of `[[0, B], [-Bᵀ, 0]]`, both the
//!   exact SVD form and a second-order Givens splitting;
//! - [`geometry`]: tangent vectors, the metric, geodesics, the exponential
//!   and logarithm maps, distance, parallel transport, a two-block CS
//!   decomposition, retractions and vector transports;
//! - [`calculus`]: Riemannian gradients and Hessians of objectives given by
//!   Euclidean derivatives, finite-difference verification, Newton steps;
//! - [`solvers`]: steepest descent (Cayley and geodesic), Newton, nonlinear
//!   conjugate gradient, and limited-memory BFGS on the manifold;
//! - [`problems`]: ready-made objectives (trace quadratic, orthogonal
//!   Procrustes, Karcher mean) with closed-form references where they exist;
//! - [`matio`]: a plain-text matrix file format for ingestion and export.

pub mod calculus;
pub mod error;
pub mod expm;
pub mod geometry;
pub mod matio;
pub mod model;
pub mod point;
pub mod problems;
pub mod solvers;

mod qr;

pub use error::GrassmannError;
pub use point::{GrassmannDims, InvolutionPoint};

/// Convenience result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, GrassmannError>;

/// Tolerance for the structural invariants of an involution point
/// (symmetry, orthogonality, trace).
pub const TOL_ORTH: f64 = 1e-10;

/// Relative rank tolerance used when interpreting full-rank coset
/// representatives.
pub const RANK_TOL: f64 = 1e-10;

/// Minimal eigenvalue gap for projections and closed-form minimizers to be
/// considered well posed.
pub const EIG_GAP_TOL: f64 = 1e-8;
