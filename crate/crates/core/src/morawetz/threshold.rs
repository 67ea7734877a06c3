use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficients of `Delta^2 rho = A/rho^3 + B s/rho^5 + C s^2/rho^7`,
/// `s` the sum of squares of the `n - k` flattened coordinates, as
/// polynomials in `eps` (lowest degree first).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BilaplacianThreshold {
    pub n: usize,
    pub k: usize,
    pub a: [f64; 3],
    pub b: [f64; 4],
    pub c: [f64; 5],
    /// Smallest `eps` with `Delta^2 rho <= 0` on `[eps0, 1]`.
    pub eps0: f64,
    /// Set for `n = 3, k = 2`, where the formula gives 1 and the useful
    /// range comes from the four-dimensional extension instead.
    pub note: Option<String>,
}

fn horner(p: &[f64], x: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

impl BilaplacianThreshold {
    pub fn a_at(&self, eps: f64) -> f64 {
        horner(&self.a, eps)
    }
    pub fn b_at(&self, eps: f64) -> f64 {
        horner(&self.b, eps)
    }
    pub fn c_at(&self, eps: f64) -> f64 {
        horner(&self.c, eps)
    }
}

pub(crate) type Polys = ([f64; 3], [f64; 4], [f64; 5]);

pub(crate) fn polynomials(n: usize, k: usize) -> Polys {
    let (nf, kf) = (n as f64, k as f64);
    let m = nf - kf;
    let a = [-(kf - 1.0) * (kf - 3.0), -2.0 * m * (kf - 3.0), -(m + 2.0) * m];
    // 6 eps ((n-k+2) eps^2 + ((2k-n)-5) eps - k + 3)
    let b = [0.0, 6.0 * (3.0 - kf), 6.0 * (2.0 * kf - nf - 5.0), 6.0 * (m + 2.0)];
    // -15 eps^2 (eps - 1)^2
    let c = [0.0, 0.0, -15.0, 30.0, -15.0];
    (a, b, c)
}

pub(crate) fn eval_poly(p: &[f64], x: f64) -> f64 {
    horner(p, x)
}

/// The polynomials `A, B, C` and `eps0` for the gauge of
/// `x_1^2 + .. + x_k^2 + eps (x_{k+1}^2 + .. + x_n^2)`.
pub fn bilaplacian_threshold(n: usize, k: usize) -> Result<BilaplacianThreshold> {
    if n < 2 || k < 1 || k > n {
        return Err(Error::InvalidInput(format!("need n >= 2 and 1 <= k <= n, got n={n}, k={k}")));
    }
    let nf = n as f64;
    let (a, b, c) = polynomials(n, k);
    let (eps0, note) = match k {
        k if k >= 3 => (0.0, None),
        2 => {
            if n == 2 {
                return Err(Error::InvalidInput("k = 2 threshold undefined for n = 2 (division by n - 2)".into()));
            }
            let e = 1.0 / nf + (2.0 * (nf - 2.0) * (nf - 1.0)).sqrt() / (nf * (nf - 2.0));
            let note = (n == 3).then(|| {
                "n = 3: the direct reading gives eps0 = 1; the range 0 < eps <= 1 comes from the extension to n = 4, k = 3".to_string()
            });
            (e, note)
        }
        _ => (4.0 / (nf + 1.0), None),
    };
    Ok(BilaplacianThreshold { n, k, a, b, c, eps0, note })
}
