//! Left-invariant G2-structures on seven-dimensional nilpotent Lie algebras:
//! induced metrics, nilsolitons, obstructions to closed G2 forms, and the
//! Laplacian flow.

// Index loops mirror the tensor notation of the formulas they implement.
#![allow(clippy::needless_range_loop)]

pub mod curvature;
pub mod error;
pub mod exterior;
pub mod flow;
pub mod g2;
pub mod liealg;
pub mod linalg;
pub mod obstruction;
pub mod verify;

pub use error::{Error, Result};
pub use exterior::{FrameVector, KForm, MultiIndex};
pub use g2::Metric;
pub use liealg::LieAlgebra;
