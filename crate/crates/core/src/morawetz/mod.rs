//! Morawetz weights: closed-form derivatives against double-double
//! differences, the gauge bilaplacian thresholds, the two-center weight and
//! illumination of a non-convex body.

mod certificate;
mod checks;
mod fd;
mod illumination;
mod threshold;
mod two_center;
mod weight;

pub use certificate::{flux_and_identity_certificate, scene_certificate, Boundary, Flags, Tolerances, WeightReport, FLUX_TOL, HARMONIC_TOL};
pub use checks::{
    check_derivatives, sample_ball, verify_bilaplacian, BilaplacianVerdict, DerivativeCheck, BILAPLACIAN_FD_TOL, DERIVATIVE_TOL,
    SIGN_TOL, SINGULAR_RADIUS,
};
pub use illumination::{extension_check, illumination, DogBone, ExtensionCheck, IlluminationReport, MIN_SAMPLES};
pub use threshold::{bilaplacian_threshold, BilaplacianThreshold};
pub use two_center::{lambda2, lambda2_eigensolve, sin2_theta, two_center_analysis, TwoCenterReport};
pub use weight::Weight;

/// `int_{-T}^{T} dz / sqrt(1 + z^2) = 2 asinh T`: the logarithmic loss from
/// the extra variable of the cylindrical extension.
pub fn log_factor(t: f64) -> crate::Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(crate::Error::InvalidInput(format!("log_factor needs T > 0, got {t}")));
    }
    Ok(2.0 * t.asinh())
}
