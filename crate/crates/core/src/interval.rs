//! Closed interval numbers `[lower, upper]` and the geometric interval-valued
//! function used to realize an imprecise parameter at a chosen imprecision
//! level.
//!
//! Subtraction and division follow the endpoint rules literally rather than
//! classical interval arithmetic: `A - B = [a_l - b_l, a_u - b_u]` and
//! `A / B = A * [1/b_l, 1/b_u]`. Cases where those rules would produce an
//! ill-ordered result are reported as errors instead of being repaired.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum IntervalError {
    #[error("interval endpoints out of order: lower {lower} > upper {upper}")]
    Unordered { lower: f64, upper: f64 },
    #[error("interval endpoint is not finite")]
    NonFinite,
    #[error("subtraction yields an invalid interval: {lower} > {upper}")]
    WidthViolation { lower: f64, upper: f64 },
    #[error("scalar multiplier must be positive, got {0}")]
    NonPositiveScalar(f64),
    #[error("divisor interval must be strictly positive, lower endpoint is {0}")]
    DivisionByNonPositive(f64),
    #[error("interval-valued function needs a positive lower endpoint, got {0}")]
    NonPositiveInterval(f64),
    #[error("interpolation parameter {0} is outside [0, 1]")]
    PiOutOfRange(f64),
}

/// A closed interval `[lower, upper]` with `lower <= upper`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct IntervalNumber {
    lower: f64,
    upper: f64,
}

impl IntervalNumber {
    pub fn new(lower: f64, upper: f64) -> Result<Self, IntervalError> {
        if !lower.is_finite() || !upper.is_finite() {
            return Err(IntervalError::NonFinite);
        }
        if lower > upper {
            return Err(IntervalError::Unordered { lower, upper });
        }
        Ok(Self { lower, upper })
    }

    /// The degenerate interval `[value, value]`, which stands for the real `value`.
    pub fn point(value: f64) -> Result<Self, IntervalError> {
        Self::new(value, value)
    }

    #[inline]
    pub fn lower(&self) -> f64 {
        self.lower
    }

    #[inline]
    pub fn upper(&self) -> f64 {
        self.upper
    }

    #[inline]
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn is_degenerate(&self) -> bool {
        self.lower == self.upper
    }

    pub fn contains(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }

    pub fn add(self, rhs: Self) -> Self {
        Self {
            lower: self.lower + rhs.lower,
            upper: self.upper + rhs.upper,
        }
    }

    /// Endpoint-wise difference. Fails when `width(rhs) > width(self)`, since
    /// the rule then produces `lower > upper`.
    pub fn sub(self, rhs: Self) -> Result<Self, IntervalError> {
        let lower = self.lower - rhs.lower;
        let upper = self.upper - rhs.upper;
        if lower > upper {
            return Err(IntervalError::WidthViolation { lower, upper });
        }
        Ok(Self { lower, upper })
    }

    pub fn scalar_mul(self, alpha: f64) -> Result<Self, IntervalError> {
        if !(alpha > 0.0) {
            return Err(IntervalError::NonPositiveScalar(alpha));
        }
        Ok(Self {
            lower: alpha * self.lower,
            upper: alpha * self.upper,
        })
    }

    pub fn mul(self, rhs: Self) -> Self {
        let (lower, upper) = min_max_products(self.lower, self.upper, rhs.lower, rhs.upper);
        Self { lower, upper }
    }

    /// `self * [1/rhs.lower, 1/rhs.upper]`, with the four-product min/max
    /// absorbing the reversed order of the reciprocal pair.
    pub fn div(self, rhs: Self) -> Result<Self, IntervalError> {
        if !(rhs.lower > 0.0) {
            return Err(IntervalError::DivisionByNonPositive(rhs.lower));
        }
        let (lower, upper) =
            min_max_products(self.lower, self.upper, 1.0 / rhs.lower, 1.0 / rhs.upper);
        Ok(Self { lower, upper })
    }

    /// Geometric interpolation `lower^(1 - pi) * upper^pi`.
    ///
    /// Returns the endpoints exactly at `pi = 0` and `pi = 1`, and the common
    /// value for any `pi` when the interval is degenerate.
    pub fn value_at(&self, pi: f64) -> Result<f64, IntervalError> {
        if !(self.lower > 0.0) {
            return Err(IntervalError::NonPositiveInterval(self.lower));
        }
        if !(0.0..=1.0).contains(&pi) {
            return Err(IntervalError::PiOutOfRange(pi));
        }
        if pi == 0.0 || self.is_degenerate() {
            return Ok(self.lower);
        }
        if pi == 1.0 {
            return Ok(self.upper);
        }
        let v = self.lower.powf(1.0 - pi) * self.upper.powf(pi);
        // Rounding in the two powers can step a hair outside the interval.
        Ok(v.clamp(self.lower, self.upper))
    }
}

fn min_max_products(al: f64, au: f64, bl: f64, bu: f64) -> (f64, f64) {
    let products = [al * bl, au * bl, al * bu, au * bu];
    let lo = products.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = products.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

impl TryFrom<[f64; 2]> for IntervalNumber {
    type Error = IntervalError;

    fn try_from(value: [f64; 2]) -> Result<Self, Self::Error> {
        Self::new(value[0], value[1])
    }
}

impl From<IntervalNumber> for [f64; 2] {
    fn from(value: IntervalNumber) -> Self {
        [value.lower, value.upper]
    }
}

impl fmt::Display for IntervalNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lower, self.upper)
    }
}
