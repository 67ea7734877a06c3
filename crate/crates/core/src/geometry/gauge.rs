use crate::error::{Error, Result};
use crate::real::Real;

/// Gauge of the ellipsoid `x_1^2 + .. + x_k^2 + eps (x_{k+1}^2 + .. + x_n^2) <= 1`,
/// optionally extended by one extra coordinate `z` as `sqrt(rho^2 + z^2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaugeWeight<T> {
    pub n: usize,
    pub k: usize,
    pub eps: T,
    pub extended: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaugeValue<T> {
    pub rho: T,
    pub grad: Vec<T>,
}

impl<T: Real> GaugeWeight<T> {
    pub fn new(n: usize, k: usize, eps: T) -> Result<Self> {
        if n < 1 || k < 1 || k > n {
            return Err(Error::InvalidInput(format!("gauge needs 1 <= k <= n, got n={n}, k={k}")));
        }
        if !(eps > T::zero() && eps <= T::one()) {
            return Err(Error::InvalidInput(format!("gauge eps {eps} outside (0, 1]")));
        }
        Ok(Self {
            n,
            k,
            eps,
            extended: false,
        })
    }

    /// Adds the extra coordinate; equivalent to the `(n + 1, k + 1)` gauge
    /// with the new coordinate listed first.
    pub fn extend(mut self) -> Self {
        self.extended = true;
        self
    }

    /// Ambient dimension of the evaluation point.
    pub fn dim(&self) -> usize {
        self.n + usize::from(self.extended)
    }

    /// Diagonal quadratic-form coefficients in evaluation order.
    pub fn coefficients(&self) -> Vec<T> {
        (0..self.n)
            .map(|i| if i < self.k { T::one() } else { self.eps })
            .chain(self.extended.then_some(T::one()))
            .collect()
    }

    pub fn rho(&self, x: &[T]) -> T {
        self.coefficients()
            .iter()
            .zip(x)
            .fold(T::zero(), |acc, (&q, &xi)| acc + q * xi * xi)
            .sqrt()
    }

    pub fn eval(&self, x: &[T]) -> Result<GaugeValue<T>> {
        if x.len() != self.dim() {
            return Err(Error::InvalidInput(format!(
                "gauge point has {} coordinates, expected {}",
                x.len(),
                self.dim()
            )));
        }
        let rho = self.rho(x);
        if !(rho > T::zero()) {
            return Err(Error::InvalidInput("gauge gradient undefined at the center".into()));
        }
        let grad = self
            .coefficients()
            .iter()
            .zip(x)
            .map(|(&q, &xi)| q * xi / rho)
            .collect();
        Ok(GaugeValue { rho, grad })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_gauge_is_the_norm() {
        let g = GaugeWeight::<f64>::new(3, 2, 1.0).unwrap();
        let v = g.eval(&[0.0, 0.0, 2.0]).unwrap();
        assert!((v.rho - 2.0).abs() < 1e-15);
        assert!((v.grad[2] - 1.0).abs() < 1e-15 && v.grad[0] == 0.0);
    }

    #[test]
    fn flat_ellipsoid_gauge_on_axis() {
        let eps = (1.0 + 3f64.sqrt()) / 4.0;
        let g = GaugeWeight::new(3, 1, eps).unwrap();
        assert!((g.eval(&[1.0, 0.0, 0.0]).unwrap().rho - 1.0).abs() < 1e-15);
        let p = [0.0, 1.0 / eps.sqrt(), 0.0];
        assert!((g.rho(&p) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let g = GaugeWeight::<f64>::new(4, 2, 0.7).unwrap().extend();
        let x = [0.3, -0.8, 1.1, 0.4, -0.6];
        let v = g.eval(&x).unwrap();
        let h = 1e-6;
        for i in 0..x.len() {
            let mut p = x;
            let mut m = x;
            p[i] += h;
            m[i] -= h;
            let fd = (g.rho(&p) - g.rho(&m)) / (2.0 * h);
            assert!((fd - v.grad[i]).abs() <= 1e-6 * v.grad[i].abs().max(1.0));
        }
    }

    #[test]
    fn center_is_rejected() {
        let g = GaugeWeight::new(3, 1, 0.5).unwrap();
        assert!(g.eval(&[0.0, 0.0, 0.0]).is_err());
    }
}
