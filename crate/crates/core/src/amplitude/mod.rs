//! Curvature products, transport amplitudes, their decay, and story counts.

mod census;
mod convergence;
mod product;
mod term;
mod trace;

pub use census::{amplitude_decay, chi0_samples, story_census, DecaySeries, StoryCensus, StoryWindow};
pub use convergence::{
    convergence_check, convergence_check_with, ConvergenceReport, ConvergenceRow, Pattern, PatternReport,
    CONVERGENCE_SAMPLES, CONVERGENCE_TILT,
};
pub use product::{curvature_product, curvature_product_warm, CurvatureProduct};
pub use term::{amplitude_eval, AmplitudeConfig, Symbol, TermSpec, FD_FLOOR};
pub use trace::TracedPhase;
