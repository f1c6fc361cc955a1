//! Log-domain magnitudes and the compensated sums behind the prefix cache.
//!
//! Every product of weights in this crate is carried as a sum of natural
//! logarithms. Magnitudes such as `(c_{-m}/eps)^j` easily leave the range of
//! an `f64`, while their logarithms stay in the thousands.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

/// Natural logarithm of a nonnegative magnitude. `-inf` encodes zero.
#[derive(Clone, Copy, Debug, Default, PartialEq, PartialOrd)]
pub struct LogMagnitude(pub f64);

impl LogMagnitude {
    /// Magnitude 1.
    pub const ONE: LogMagnitude = LogMagnitude(0.0);
    /// Magnitude 0.
    pub const ZERO: LogMagnitude = LogMagnitude(f64::NEG_INFINITY);

    pub fn from_magnitude(x: f64) -> Self {
        LogMagnitude(x.abs().ln())
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    pub fn magnitude(self) -> f64 {
        self.0.exp()
    }

    pub fn is_zero(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }

    /// Total order used for deterministic tie-breaking (NaN sorts last).
    pub fn total_cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }

    /// `x^s` for a real exponent; `0^s` stays `0` for `s > 0`.
    pub fn powf(self, s: f64) -> Self {
        if s == 0.0 {
            return LogMagnitude::ONE;
        }
        LogMagnitude(self.0 * s)
    }
}

impl Add for LogMagnitude {
    type Output = LogMagnitude;
    fn add(self, rhs: LogMagnitude) -> LogMagnitude {
        LogMagnitude(self.0 + rhs.0)
    }
}

impl AddAssign for LogMagnitude {
    fn add_assign(&mut self, rhs: LogMagnitude) {
        self.0 += rhs.0;
    }
}

impl Sub for LogMagnitude {
    type Output = LogMagnitude;
    fn sub(self, rhs: LogMagnitude) -> LogMagnitude {
        LogMagnitude(self.0 - rhs.0)
    }
}

impl Neg for LogMagnitude {
    type Output = LogMagnitude;
    fn neg(self) -> LogMagnitude {
        LogMagnitude(-self.0)
    }
}

impl Mul<f64> for LogMagnitude {
    type Output = LogMagnitude;
    fn mul(self, rhs: f64) -> LogMagnitude {
        self.powf(rhs)
    }
}

impl fmt::Display for LogMagnitude {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// `log(sum_i exp(x_i))` anchored at the maximum. Empty or all `-inf` gives `-inf`.
pub fn log_sum_exp(xs: impl IntoIterator<Item = f64> + Clone) -> f64 {
    let m = xs.clone().into_iter().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY || !m.is_finite() {
        return m;
    }
    let s: f64 = xs.into_iter().map(|x| (x - m).exp()).sum();
    m + s.ln()
}

/// Double-double accumulator (unevaluated sum `hi + lo`).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub(crate) struct Dd {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

#[inline]
fn fast_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

impl Dd {
    pub(crate) const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    #[inline]
    pub(crate) fn add_f64(self, x: f64) -> Dd {
        let (s, e) = two_sum(self.hi, x);
        let (hi, lo) = fast_two_sum(s, e + self.lo);
        Dd { hi, lo }
    }

    /// `self - other`, rounded once to `f64`.
    #[inline]
    pub(crate) fn diff(self, other: Dd) -> f64 {
        let (s, e) = two_sum(self.hi, -other.hi);
        s + (e + (self.lo - other.lo))
    }
}
