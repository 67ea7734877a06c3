use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("tangential incidence at {point:?} (|dir·n| = {cosine:e})")]
    Tangential { point: [f64; 3], cosine: f64 },
    #[error("direction is not incoming (dir·n = {0:e})")]
    NotIncoming(f64),
    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },
    #[error("query outside the phase domain: {0}")]
    Domain(String),
    #[error("focal point reached (1 + tau*kappa = {0:e})")]
    Focal(f64),
    #[error("finite-difference step degenerate: {0}")]
    Degenerate(String),
    #[error("numerical inconsistency: {0}")]
    Inconsistent(String),
    #[error("under-resolved: {0}")]
    Resolution(String),
    #[error("configuration rejected: {reason}")]
    Budget { reason: String, minimal_k: Option<u32> },
}

pub type Result<T> = std::result::Result<T, Error>;
