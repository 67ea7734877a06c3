//! Double-double scalar.
//!
//! Thin wrapper over [`twofloat::TwoFloat`]. The wrapper exists because
//! `TwoFloat` division forms `1 - b.hi * (1 / b.hi)` without a fused
//! multiply-add, which caps quotients near `f64` accuracy, and because its
//! `FromPrimitive::from_f64` truncates to an integer. Everything else is
//! delegated.

use std::cmp::Ordering;
use std::fmt;
use std::num::FpCategory;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Rem, RemAssign, Sub, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive, Num, NumCast, One, ToPrimitive, Zero};
use twofloat::TwoFloat;

/// About 32 significant digits.
#[derive(Clone, Copy, Default, PartialEq)]
pub struct DoubleDouble(TwoFloat);

impl DoubleDouble {
    /// Unit round-off, `2^-105`.
    pub const PRECISION: f64 = f64::EPSILON * f64::EPSILON * 0.5;

    pub fn new(x: f64) -> Self {
        Self(<TwoFloat as From<f64>>::from(x))
    }

    pub fn hi(self) -> f64 {
        self.0.hi()
    }

    pub fn lo(self) -> f64 {
        self.0.lo()
    }

    pub fn to_f64(self) -> f64 {
        self.0.hi() + self.0.lo()
    }
}

impl From<f64> for DoubleDouble {
    fn from(x: f64) -> Self {
        Self::new(x)
    }
}

impl fmt::Debug for DoubleDouble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:e} + {:e}", self.hi(), self.lo())
    }
}

impl fmt::Display for DoubleDouble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

impl PartialOrd for DoubleDouble {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.0.partial_cmp(&other.0)
    }
}

// Long division with three partial quotients; each remainder is exact in
// double-double arithmetic, so the result is good to a few units of 2^-104.
fn dd_div(a: TwoFloat, b: TwoFloat) -> TwoFloat {
    let q1 = a.hi() / b.hi();
    if !q1.is_finite() {
        return <TwoFloat as From<f64>>::from(q1);
    }
    let r = a - b * q1;
    let q2 = r.hi() / b.hi();
    let r = r - b * q2;
    let q3 = r.hi() / b.hi();
    TwoFloat::new_add(q1, q2) + q3
}

macro_rules! binop {
    ($tr:ident, $f:ident, $atr:ident, $af:ident, $op:expr) => {
        impl $tr for DoubleDouble {
            type Output = Self;
            #[inline]
            fn $f(self, rhs: Self) -> Self {
                Self($op(self.0, rhs.0))
            }
        }
        impl $atr for DoubleDouble {
            #[inline]
            fn $af(&mut self, rhs: Self) {
                *self = $tr::$f(*self, rhs);
            }
        }
    };
}

binop!(Add, add, AddAssign, add_assign, |a, b| a + b);
binop!(Sub, sub, SubAssign, sub_assign, |a, b| a - b);
binop!(Mul, mul, MulAssign, mul_assign, |a, b| a * b);
binop!(Div, div, DivAssign, div_assign, dd_div);
binop!(Rem, rem, RemAssign, rem_assign, |a: TwoFloat, b: TwoFloat| a
    - dd_div(a, b).trunc() * b);

impl Neg for DoubleDouble {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self(-self.0)
    }
}

impl Zero for DoubleDouble {
    fn zero() -> Self {
        Self::new(0.0)
    }
    fn is_zero(&self) -> bool {
        self.hi() == 0.0
    }
}

impl One for DoubleDouble {
    fn one() -> Self {
        Self::new(1.0)
    }
}

impl Num for DoubleDouble {
    type FromStrRadixErr = <f64 as Num>::FromStrRadixErr;
    fn from_str_radix(s: &str, radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        f64::from_str_radix(s, radix).map(Self::new)
    }
}

impl ToPrimitive for DoubleDouble {
    fn to_i64(&self) -> Option<i64> {
        self.0.to_i64()
    }
    fn to_u64(&self) -> Option<u64> {
        self.0.to_u64()
    }
    fn to_f64(&self) -> Option<f64> {
        Some(DoubleDouble::to_f64(*self))
    }
}

impl FromPrimitive for DoubleDouble {
    fn from_i64(n: i64) -> Option<Self> {
        TwoFloat::from_i64(n).map(Self)
    }
    fn from_u64(n: u64) -> Option<Self> {
        TwoFloat::from_u64(n).map(Self)
    }
    fn from_f64(n: f64) -> Option<Self> {
        Some(Self::new(n))
    }
    fn from_f32(n: f32) -> Option<Self> {
        Some(Self::new(n as f64))
    }
}

impl NumCast for DoubleDouble {
    fn from<T: ToPrimitive>(n: T) -> Option<Self> {
        n.to_f64().map(Self::new)
    }
}

macro_rules! unary {
    ($($f:ident),*) => {
        $(
            #[inline]
            fn $f(self) -> Self {
                Self(self.0.$f())
            }
        )*
    };
}

macro_rules! constant {
    ($($f:ident = $v:expr),*) => {
        $(
            #[inline]
            fn $f() -> Self {
                Self($v)
            }
        )*
    };
}

impl Float for DoubleDouble {
    constant!(
        nan = TwoFloat::NAN,
        infinity = TwoFloat::INFINITY,
        neg_infinity = TwoFloat::NEG_INFINITY,
        neg_zero = <TwoFloat as From<f64>>::from(-0.0),
        min_value = TwoFloat::MIN,
        min_positive_value = TwoFloat::MIN_POSITIVE,
        max_value = TwoFloat::MAX,
        epsilon = <TwoFloat as From<f64>>::from(DoubleDouble::PRECISION)
    );

    unary!(
        floor, ceil, round, trunc, fract, sqrt, exp2, log2, log10, sin, cos, tan,
        asin, acos, atan, exp_m1, ln_1p, sinh, cosh, tanh, asinh, acosh, atanh
    );

    /// twofloat's exp and ln are good to about 1e-18 and 1e-14; these are
    /// reduced by `ln 2` and by halving, then summed to full precision.
    fn exp(self) -> Self {
        if !self.is_finite() || self.hi().abs() > 709.0 {
            return Self(self.0.exp());
        }
        let ln2 = DoubleDouble::LN_2();
        let k = (self / ln2).round();
        let r = (self - k * ln2) / DoubleDouble::new(1024.0);
        let (mut term, mut sum) = (DoubleDouble::one(), DoubleDouble::one());
        for i in 1..20 {
            term = term * r / DoubleDouble::new(i as f64);
            sum = sum + term;
        }
        for _ in 0..10 {
            sum = sum * sum;
        }
        sum * DoubleDouble::new(2f64.powi(k.hi() as i32))
    }

    fn ln(self) -> Self {
        if !(self.hi() > 0.0) || !self.is_finite() {
            return Self(self.0.ln());
        }
        let mut y = DoubleDouble::new(self.hi().ln());
        for _ in 0..2 {
            y = y + self * (-y).exp() - DoubleDouble::one();
        }
        y
    }

    fn is_nan(self) -> bool {
        self.hi().is_nan()
    }
    fn is_infinite(self) -> bool {
        self.hi().is_infinite()
    }
    fn is_finite(self) -> bool {
        self.hi().is_finite()
    }
    fn is_normal(self) -> bool {
        self.hi().is_normal()
    }
    fn classify(self) -> FpCategory {
        self.hi().classify()
    }
    fn abs(self) -> Self {
        Self(self.0.abs())
    }
    fn signum(self) -> Self {
        if self.is_nan() {
            self
        } else {
            Self::new(self.hi().signum())
        }
    }
    fn is_sign_positive(self) -> bool {
        self.hi().is_sign_positive()
    }
    fn is_sign_negative(self) -> bool {
        self.hi().is_sign_negative()
    }
    fn mul_add(self, a: Self, b: Self) -> Self {
        self * a + b
    }
    fn recip(self) -> Self {
        Self::one() / self
    }
    fn powi(self, n: i32) -> Self {
        let mut result = Self::one();
        let mut base = self;
        let mut k = n.unsigned_abs();
        while k > 0 {
            if k & 1 == 1 {
                result *= base;
            }
            base *= base;
            k >>= 1;
        }
        if n < 0 {
            result.recip()
        } else {
            result
        }
    }
    fn powf(self, y: Self) -> Self {
        Self(self.0.powf(y.0))
    }
    fn log(self, base: Self) -> Self {
        self.ln() / base.ln()
    }
    fn max(self, other: Self) -> Self {
        if self.is_nan() || other > self {
            other
        } else {
            self
        }
    }
    fn min(self, other: Self) -> Self {
        if self.is_nan() || other < self {
            other
        } else {
            self
        }
    }
    fn abs_sub(self, other: Self) -> Self {
        (self - other).max(Self::zero())
    }
    fn cbrt(self) -> Self {
        // Newton step from the f64 root; `TwoFloat::cbrt` divides internally.
        let x = Self::new(self.to_f64().cbrt());
        if x.is_zero() || !x.is_finite() {
            return x;
        }
        x - (x * x * x - self) / (Self::new(3.0) * x * x)
    }
    fn hypot(self, other: Self) -> Self {
        (self * self + other * other).sqrt()
    }
    fn atan2(self, other: Self) -> Self {
        Self(self.0.atan2(other.0))
    }
    fn sin_cos(self) -> (Self, Self) {
        let (s, c) = self.0.sin_cos();
        (Self(s), Self(c))
    }
    fn integer_decode(self) -> (u64, i16, i8) {
        self.hi().integer_decode()
    }
    fn to_degrees(self) -> Self {
        self * Self::new(180.0) / Self::PI()
    }
    fn to_radians(self) -> Self {
        self * Self::PI() / Self::new(180.0)
    }
}

impl FloatConst for DoubleDouble {
    constant!(
        E = twofloat::consts::E,
        FRAC_1_PI = twofloat::consts::FRAC_1_PI,
        FRAC_1_SQRT_2 = twofloat::consts::FRAC_1_SQRT_2,
        FRAC_2_PI = twofloat::consts::FRAC_2_PI,
        FRAC_2_SQRT_PI = twofloat::consts::FRAC_2_SQRT_PI,
        FRAC_PI_2 = twofloat::consts::FRAC_PI_2,
        FRAC_PI_3 = twofloat::consts::FRAC_PI_3,
        FRAC_PI_4 = twofloat::consts::FRAC_PI_4,
        FRAC_PI_6 = twofloat::consts::FRAC_PI_6,
        FRAC_PI_8 = twofloat::consts::FRAC_PI_8,
        LN_10 = twofloat::consts::LN_10,
        LN_2 = twofloat::consts::LN_2,
        LOG10_E = twofloat::consts::LOG10_E,
        LOG2_E = twofloat::consts::LOG2_E,
        PI = twofloat::consts::PI,
        SQRT_2 = twofloat::consts::SQRT_2
    );
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: DoubleDouble, b: DoubleDouble) -> f64 {
        ((a - b) / b).abs().to_f64()
    }

    #[test]
    fn division_is_double_double_accurate() {
        let x = DoubleDouble::new(3.0) / DoubleDouble::new(7.0);
        assert!(((x * DoubleDouble::new(7.0)) - DoubleDouble::new(3.0)).abs().to_f64() < 1e-31);
        let y = DoubleDouble::new(2.0).sqrt();
        let z = DoubleDouble::new(1.0) / y;
        assert!(rel(z * y, DoubleDouble::one()) < 1e-31);
    }

    #[test]
    fn literals_and_epsilon() {
        use crate::real::Real;
        assert_eq!(DoubleDouble::lit(0.5).hi(), 0.5);
        assert!(DoubleDouble::epsilon().to_f64() < 1e-31);
        assert!(DoubleDouble::epsilon().to_f64() > 1e-33);
    }

    #[test]
    fn exp_and_ln_are_double_double_accurate() {
        assert!(rel(DoubleDouble::one().exp(), DoubleDouble::E()) < 1e-28);
        assert!(rel(DoubleDouble::new(2.0).ln(), DoubleDouble::LN_2()) < 1e-28);
        assert!(rel(DoubleDouble::new(10.0).ln(), DoubleDouble::LN_10()) < 1e-28);
        let x = DoubleDouble::new(-37.25);
        assert!(rel(x.exp().ln(), x) < 1e-28);
    }

    #[test]
    fn powers_and_roots() {
        let x = DoubleDouble::new(3.0) - DoubleDouble::new(8.0).sqrt();
        // (3 - sqrt 8)(3 + sqrt 8) = 1
        let y = DoubleDouble::new(3.0) + DoubleDouble::new(8.0).sqrt();
        assert!(rel(x.powi(4) * y.powi(4), DoubleDouble::one()) < 1e-29);
        assert!(rel(x.powi(-2), y.powi(2)) < 1e-29);
        let c = DoubleDouble::new(10.0).cbrt();
        assert!(rel(c * c * c, DoubleDouble::new(10.0)) < 1e-30);
        assert_eq!(DoubleDouble::zero().powi(0), DoubleDouble::one());
    }
}
