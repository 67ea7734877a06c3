//! Reflected phases: wavefront transport, broken-ray solves and the
//! derivative-growth certificate.

mod certificate;
mod eval;
mod properties;
mod solver;
mod wavefront;

pub use certificate::{derivative_growth_certificate, GrowthEntry, GrowthReport};
pub use eval::{evaluate_phase, evaluate_phase_warm, PhaseQuery, PhaseSolution, DEFAULT_CONE_COS};
pub use properties::{sample_property_p, PropertySampling};
pub use solver::{solve_broken_ray, BrokenRay, Launch};
pub use wavefront::{propagate_wavefront, reflect_wavefront, Sign, WavefrontSample};
