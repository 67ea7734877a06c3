//! Strictly convex obstacles, the scene they form and convex gauges.

mod body;
mod gauge;
mod scene;

pub use body::{fibonacci_sphere, BodyKind, ConvexBody, Hit, LevelFn, RayHit, SurfacePoint};
pub use gauge::{GaugeValue, GaugeWeight};
pub use scene::{trapped_ray, Cylinder, Scene, Tolerances, TrappedRay};
