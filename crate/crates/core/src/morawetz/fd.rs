//! Fourth-order central differences, evaluated in double-double so that the
//! steps can be small without round-off taking over.

use num_traits::Float;

use crate::dd::DoubleDouble;

type Dd = DoubleDouble;

/// `(offset, numerator, denominator)`.
type Stencil<const N: usize> = [(i32, f64, f64); N];

const D1: Stencil<4> = [(-2, 1.0, 12.0), (-1, -2.0, 3.0), (1, 2.0, 3.0), (2, -1.0, 12.0)];
const D2: Stencil<5> = [(-2, -1.0, 12.0), (-1, 4.0, 3.0), (0, -5.0, 2.0), (1, 4.0, 3.0), (2, -1.0, 12.0)];
const D4: Stencil<7> = [
    (-3, -1.0, 6.0),
    (-2, 2.0, 1.0),
    (-1, -13.0, 2.0),
    (0, 28.0, 3.0),
    (1, -13.0, 2.0),
    (2, 2.0, 1.0),
    (3, -1.0, 6.0),
];

fn shifted(x: &[f64], h: f64, moves: &[(usize, i32)]) -> Vec<Dd> {
    let mut p: Vec<Dd> = x.iter().map(|&v| Dd::new(v)).collect();
    for &(i, k) in moves {
        p[i] += Dd::new(h) * Dd::new(k as f64);
    }
    p
}

fn coef(num: f64, den: f64) -> Dd {
    Dd::new(num) / Dd::new(den)
}

pub fn gradient<F: Fn(&[Dd]) -> Dd>(f: &F, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let s = D1.iter().fold(Dd::new(0.0), |acc, &(k, p, q)| acc + coef(p, q) * f(&shifted(x, h, &[(i, k)])));
            (s / Dd::new(h)).to_f64()
        })
        .collect()
}

fn second(f: &dyn Fn(&[Dd]) -> Dd, x: &[f64], h: f64, i: usize, j: usize) -> Dd {
    if i == j {
        D2.iter().fold(Dd::new(0.0), |acc, &(k, p, q)| acc + coef(p, q) * f(&shifted(x, h, &[(i, k)])))
    } else {
        let mut s = Dd::new(0.0);
        for &(a, pa, qa) in &D1 {
            for &(b, pb, qb) in &D1 {
                s += coef(pa, qa) * coef(pb, qb) * f(&shifted(x, h, &[(i, a), (j, b)]));
            }
        }
        s
    }
}

pub fn hessian<F: Fn(&[Dd]) -> Dd>(f: &F, x: &[f64], h: f64) -> Vec<Vec<f64>> {
    let n = x.len();
    let h2 = Dd::new(h) * Dd::new(h);
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let v = (second(f, x, h, i, j) / h2).to_f64();
            m[i][j] = v;
            m[j][i] = v;
        }
    }
    m
}

pub fn laplacian<F: Fn(&[Dd]) -> Dd>(f: &F, x: &[f64], h: f64) -> f64 {
    let h2 = Dd::new(h) * Dd::new(h);
    let s = (0..x.len()).fold(Dd::new(0.0), |acc, i| acc + second(f, x, h, i, i));
    (s / h2).to_f64()
}

/// `sum_i d_i^4 + 2 sum_{i<j} d_i^2 d_j^2`.
pub fn bilaplacian<F: Fn(&[Dd]) -> Dd>(f: &F, x: &[f64], h: f64) -> f64 {
    let n = x.len();
    let mut s = Dd::new(0.0);
    for i in 0..n {
        for &(k, p, q) in &D4 {
            s += coef(p, q) * f(&shifted(x, h, &[(i, k)]));
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let mut m = Dd::new(0.0);
            for &(a, pa, qa) in &D2 {
                for &(b, pb, qb) in &D2 {
                    m += coef(pa, qa) * coef(pb, qb) * f(&shifted(x, h, &[(i, a), (j, b)]));
                }
            }
            s += Dd::new(2.0) * m;
        }
    }
    let h4 = Dd::new(h).powi(4);
    (s / h4).to_f64()
}
