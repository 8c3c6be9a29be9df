use std::f64::consts::PI;
use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Numeric type that dynamics, costs and policies are written against.
///
/// `f64` is the plain fast path; [`Var`](super::Var) records onto a tape and
/// [`Dual`](super::Dual) carries one tangent. All three run the same sequence
/// of floating-point operations on the primal values.
///
/// Non-smooth primitives follow one convention: `clamp` has derivative 1
/// strictly inside the interval and 0 on or outside the boundary; `min` and
/// `max` send the derivative to the second operand on ties.
pub trait Scalar:
    Copy
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn constant(v: f64) -> Self;
    fn value(self) -> f64;

    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn tanh(self) -> Self;
    fn exp(self) -> Self;
    fn sqrt(self) -> Self;
    fn powi(self, n: i32) -> Self;
    fn powf(self, p: f64) -> Self;
    fn min(self, other: Self) -> Self;
    fn max(self, other: Self) -> Self;
    fn clamp(self, lo: f64, hi: f64) -> Self;

    /// Angle wrapped into `(−π, π]`; derivative 1 away from the cut.
    fn wrap_angle(self) -> Self;

    fn zero() -> Self {
        Self::constant(0.0)
    }

    fn square(self) -> Self {
        self * self
    }
}

/// Multiple of 2π subtracted by [`Scalar::wrap_angle`].
pub(crate) fn wrap_offset(theta: f64) -> f64 {
    2.0 * PI * ((theta - PI) / (2.0 * PI)).ceil()
}

/// Distance from `theta` to the nearest wrap cut (odd multiple of π).
pub(crate) fn wrap_margin(theta: f64) -> f64 {
    let shifted = (theta - PI).rem_euclid(2.0 * PI);
    shifted.min(2.0 * PI - shifted)
}

impl Scalar for f64 {
    #[inline]
    fn constant(v: f64) -> Self {
        v
    }

    #[inline]
    fn value(self) -> f64 {
        self
    }

    #[inline]
    fn sin(self) -> Self {
        f64::sin(self)
    }

    #[inline]
    fn cos(self) -> Self {
        f64::cos(self)
    }

    #[inline]
    fn tanh(self) -> Self {
        f64::tanh(self)
    }

    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }

    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }

    #[inline]
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }

    #[inline]
    fn powf(self, p: f64) -> Self {
        f64::powf(self, p)
    }

    #[inline]
    fn min(self, other: Self) -> Self {
        if self < other {
            self
        } else {
            other
        }
    }

    #[inline]
    fn max(self, other: Self) -> Self {
        if self > other {
            self
        } else {
            other
        }
    }

    #[inline]
    fn clamp(self, lo: f64, hi: f64) -> Self {
        if self < lo {
            lo
        } else if self > hi {
            hi
        } else {
            self
        }
    }

    #[inline]
    fn wrap_angle(self) -> Self {
        self - wrap_offset(self)
    }
}

/// `Σ aᵢ·bᵢ` in index order.
pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    let mut acc = S::zero();
    for (x, y) in a.iter().zip(b) {
        acc = acc + *x * *y;
    }
    acc
}

pub fn constants<S: Scalar>(v: &[f64]) -> Vec<S> {
    v.iter().map(|x| S::constant(*x)).collect()
}

pub fn values<S: Scalar>(v: &[S]) -> Vec<f64> {
    v.iter().map(|x| x.value()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_convention() {
        assert_eq!(PI.wrap_angle(), PI);
        assert_eq!((-PI).wrap_angle(), PI);
        assert!((3.0 * PI / 2.0).wrap_angle() + PI / 2.0 < 1e-15);
        assert_eq!(0.3f64.wrap_angle(), 0.3);
        assert!(wrap_margin(PI) < 1e-15);
        assert!((wrap_margin(0.0) - PI).abs() < 1e-15);
    }

    #[test]
    fn clamp_and_ties() {
        assert_eq!(Scalar::clamp(3.0, -1.0, 1.0), 1.0);
        assert_eq!(Scalar::max(2.0, 2.0), 2.0);
        assert_eq!(Scalar::min(-1.0, 4.0), -1.0);
    }
}
