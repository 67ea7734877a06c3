use serde::{Deserialize, Serialize};

use crate::fit::{log_linear_fit, log_log_fit, LinearFit};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecayCurve {
    pub h: f64,
    pub t: Vec<f64>,
    pub values: Vec<f64>,
    /// `log value` against `log t`.
    pub power: Option<LinearFit>,
    /// `log value` against `t`.
    pub exponential: Option<LinearFit>,
    /// Fitted power `p` of `t^{-p}`.
    pub p_hat: Option<f64>,
    /// Fitted rate `nu` of `e^{-nu t}`.
    pub nu_hat: Option<f64>,
}

impl DecayCurve {
    pub fn new(h: f64, t: Vec<f64>, values: Vec<f64>) -> Self {
        let power = log_log_fit(&t, &values);
        let exponential = log_linear_fit(&t, &values);
        Self {
            h,
            p_hat: power.map(|f| -f.slope),
            nu_hat: exponential.map(|f| -f.slope),
            power,
            exponential,
            t,
            values,
        }
    }

    /// `h^{(d+1)/2} value`.
    pub fn normalized(&self) -> Vec<f64> {
        self.values.iter().map(|v| v * self.h * self.h).collect()
    }

    /// Upper envelope: the running maximum from the right, which a
    /// monotone bound must dominate. Fits of oscillating curves use it.
    pub fn envelope(&self) -> DecayCurve {
        let mut env = self.values.clone();
        for i in (0..env.len().saturating_sub(1)).rev() {
            env[i] = env[i].max(env[i + 1]);
        }
        DecayCurve::new(self.h, self.t.clone(), env)
    }
}

/// Fitted exponent of `value ~ h^a` across a ladder of `h`.
pub fn h_exponent(hs: &[f64], values: &[f64]) -> Option<LinearFit> {
    log_log_fit(hs, values)
}
