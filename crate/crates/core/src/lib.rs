//! Geometric optics outside two strictly convex obstacles: billiard flow,
//! trapped sets, reflected phases and amplitudes, a stationary-phase
//! parametrix with decay measurements, and Morawetz-weight certificates.
//!
//! Geometry, flow, wavefront and phase code is generic over [`Real`]
//! (`f32`, `f64` or [`DoubleDouble`]); the measurement pipelines run in
//! `f64`, with double-double oracles where differences need the headroom.

pub mod amplitude;
pub mod billiard;
mod dd;
pub mod error;
pub mod fit;
pub mod geometry;
pub mod linalg;
pub mod morawetz;
pub mod parametrix;
pub mod phase;
pub mod real;
pub mod trapped;

pub use error::{Error, Result};
pub use dd::DoubleDouble;
pub use real::Real;

pub type Vec3d = linalg::Vec3<f64>;
pub type Scene = geometry::Scene<f64>;
pub type ConvexBody = geometry::ConvexBody<f64>;
