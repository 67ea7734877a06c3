//! Stationary-phase assembly of the parametrix `S_K = S_K^0 + S_K^r` and
//! its decay measurements.

mod config;
mod critical;
mod curve;
mod free;
mod reflected;

pub use config::{remainder_budget, shell_bump, ParametrixConfig, RemainderBudget, DIM};
pub use critical::{
    chart_hessian, critical_point, critical_point_generic, newton_on_sphere, CriticalPoint, StationaryPhaseData,
    DEGENERATE_DET,
};
pub use curve::{h_exponent, DecayCurve};
pub use free::{dropped_fraction, free_brute_force, free_sup, free_term, free_value, radial_quadrature, RADIAL_NODES};
pub use reflected::{
    budget_doubling, default_budget, radial_factor, reduced_phase, reflected_sum, story_list, BudgetDoubling,
    ContributionStats, ReflectedCurve, A1_STEP, MAX_EXCLUDED,
};
