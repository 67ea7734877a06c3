use num_traits::Float;
use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::threshold::{eval_poly, polynomials};
use crate::dd::DoubleDouble;
use crate::error::{Error, Result};
use crate::geometry::GaugeWeight;

/// A Morawetz weight with closed-form derivatives.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Weight {
    /// `|x| + |x - c|` in three dimensions.
    TwoCenter { c: [f64; 3] },
    /// Gauge of `x_1^2 + .. + x_k^2 + eps (..) <= 1` in `n` dimensions,
    /// with `extended` adding one unit coordinate (`sqrt(rho^2 + z^2)`).
    Gauge { n: usize, k: usize, eps: f64, extended: bool },
}

impl Weight {
    pub fn gauge(n: usize, k: usize, eps: f64) -> Result<Self> {
        GaugeWeight::new(n, k, eps)?;
        Ok(Weight::Gauge { n, k, eps, extended: false })
    }

    pub fn extended(n: usize, k: usize, eps: f64) -> Result<Self> {
        GaugeWeight::new(n, k, eps)?;
        Ok(Weight::Gauge { n, k, eps, extended: true })
    }

    pub fn dim(&self) -> usize {
        match *self {
            Weight::TwoCenter { .. } => 3,
            Weight::Gauge { n, extended, .. } => n + usize::from(extended),
        }
    }

    fn coefficients(&self) -> Vec<f64> {
        match *self {
            Weight::TwoCenter { .. } => vec![1.0; 3],
            Weight::Gauge { n, k, eps, extended } => (0..n)
                .map(|i| if i < k { 1.0 } else { eps })
                .chain(extended.then_some(1.0))
                .collect(),
        }
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::InvalidInput(format!("point has {} coordinates, expected {}", x.len(), self.dim())));
        }
        if !(self.singular_scale(x) > 0.0) {
            return Err(Error::InvalidInput("weight derivatives undefined on the singular set".into()));
        }
        Ok(())
    }

    /// Distance-like size of `x` from the singular set: `rho` for gauges,
    /// the distance to the nearer center for the two-center weight.
    pub fn singular_scale(&self, x: &[f64]) -> f64 {
        match *self {
            Weight::TwoCenter { c } => norm(x).min(norm(&sub(x, &c))),
            Weight::Gauge { .. } => self.value(x),
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match *self {
            Weight::TwoCenter { c } => norm(x) + norm(&sub(x, &c)),
            Weight::Gauge { .. } => self.coefficients().iter().zip(x).map(|(q, v)| q * v * v).sum::<f64>().sqrt(),
        }
    }

    /// The value in double-double, for the finite-difference oracles.
    pub fn value_dd(&self, x: &[DoubleDouble]) -> DoubleDouble {
        let zero = DoubleDouble::new(0.0);
        match *self {
            Weight::TwoCenter { c } => {
                let a = x.iter().fold(zero, |s, &v| s + v * v).sqrt();
                let b = x.iter().zip(c).fold(zero, |s, (&v, c)| s + (v - DoubleDouble::new(c)) * (v - DoubleDouble::new(c))).sqrt();
                a + b
            }
            Weight::Gauge { .. } => self
                .coefficients()
                .iter()
                .zip(x)
                .fold(zero, |s, (&q, &v)| s + DoubleDouble::new(q) * v * v)
                .sqrt(),
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        Ok(match *self {
            Weight::TwoCenter { c } => {
                let (a, b) = (norm(x), norm(&sub(x, &c)));
                (0..3).map(|i| x[i] / a + (x[i] - c[i]) / b).collect()
            }
            Weight::Gauge { .. } => {
                let rho = self.value(x);
                self.coefficients().iter().zip(x).map(|(q, v)| q * v / rho).collect()
            }
        })
    }

    pub fn hessian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.check(x)?;
        let n = self.dim();
        Ok(match *self {
            Weight::TwoCenter { c } => {
                let mut m = DMatrix::zeros(3, 3);
                for p in [x.to_vec(), sub(x, &c)] {
                    let r = norm(&p);
                    for i in 0..3 {
                        for j in 0..3 {
                            let id = if i == j { 1.0 } else { 0.0 };
                            m[(i, j)] += (id - p[i] * p[j] / (r * r)) / r;
                        }
                    }
                }
                m
            }
            Weight::Gauge { .. } => {
                let rho = self.value(x);
                let q = self.coefficients();
                DMatrix::from_fn(n, n, |i, j| {
                    let d = if i == j { q[i] / rho } else { 0.0 };
                    d - q[i] * x[i] * q[j] * x[j] / rho.powi(3)
                })
            }
        })
    }

    pub fn laplacian(&self, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        Ok(match *self {
            Weight::TwoCenter { c } => 2.0 / norm(x) + 2.0 / norm(&sub(x, &c)),
            Weight::Gauge { .. } => {
                let rho = self.value(x);
                let q = self.coefficients();
                let tr: f64 = q.iter().sum();
                let w: f64 = q.iter().zip(x).map(|(q, v)| q * q * v * v).sum();
                tr / rho - w / rho.powi(3)
            }
        })
    }

    /// Closed form: identically zero for the two-center weight, the
    /// `A/rho^3 + B s/rho^5 + C s^2/rho^7` expansion for gauges.
    pub fn bilaplacian(&self, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        Ok(match *self {
            Weight::TwoCenter { .. } => 0.0,
            Weight::Gauge { n, k, eps, extended } => {
                let (dim, kk) = (n + usize::from(extended), k + usize::from(extended));
                let (a, b, c) = polynomials(dim, kk);
                let rho = self.value(x);
                let q = self.coefficients();
                let s: f64 = q.iter().zip(x).filter(|(&q, _)| q != 1.0).map(|(_, v)| v * v).sum();
                // with eps = 1 there is nothing flattened; s drops out since B(1) = C(1) = 0
                eval_poly(&a, eps) / rho.powi(3) + eval_poly(&b, eps) * s / rho.powi(5) + eval_poly(&c, eps) * s * s / rho.powi(7)
            }
        })
    }

    /// Eigenvalues of the Hessian, ascending.
    pub fn hessian_eigenvalues(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.hessian(x)?).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        Ok(ev)
    }
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub(crate) fn sub(x: &[f64], c: &[f64]) -> Vec<f64> {
    x.iter().zip(c).map(|(a, b)| a - b).collect()
}
