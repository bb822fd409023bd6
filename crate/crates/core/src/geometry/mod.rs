//! Riemannian geometry of the involution representation.
//!
//! Tangent vectors at a point `Q = V·I_{k,n-k}·Vᵀ` are determined by a
//! `k×(n-k)` effective block `B` through `X = V·[[0, B], [Bᵀ, 0]]·Vᵀ`, and
//! every operation here (metric, geodesics, logarithm, transport,
//! retractions) works on those blocks, moving the cached eigenbasis by
//! structured orthogonal factors.

mod csd;
mod geodesic;
mod retraction;
mod tangent;

pub use csd::{csd_2block, CsFactors};
pub use geodesic::{
    connecting_tangent, distance, exp_map, geodesic, log_map, parallel_transport,
};
pub use retraction::{retract, vector_transport, RetractionKind};
pub use tangent::{project_normal, project_tangent, TangentVector};
