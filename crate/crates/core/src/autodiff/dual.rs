use std::ops::{Add, Div, Mul, Neg, Sub};

use super::scalar::{wrap_offset, Scalar};

/// First-order dual number `value + tangent·ε`.
///
/// Propagates a single tangent direction alongside the primal value, giving an
/// evaluation path for directional derivatives that shares no code with the
/// tape sweeps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub value: f64,
    pub tangent: f64,
}

impl Dual {
    pub fn new(value: f64, tangent: f64) -> Self {
        Self { value, tangent }
    }

    pub fn variable(value: f64) -> Self {
        Self::new(value, 1.0)
    }
}

impl Add for Dual {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Dual::new(self.value + rhs.value, self.tangent + rhs.tangent)
    }
}

impl Sub for Dual {
    type Output = Self;

    fn sub(self, rhs: Self) -> Self {
        Dual::new(self.value - rhs.value, self.tangent - rhs.tangent)
    }
}

impl Mul for Dual {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        Dual::new(
            self.value * rhs.value,
            self.tangent * rhs.value + self.value * rhs.tangent,
        )
    }
}

impl Div for Dual {
    type Output = Self;

    fn div(self, rhs: Self) -> Self {
        let q = self.value / rhs.value;
        Dual::new(q, (self.tangent - q * rhs.tangent) / rhs.value)
    }
}

impl Neg for Dual {
    type Output = Self;

    fn neg(self) -> Self {
        Dual::new(-self.value, -self.tangent)
    }
}

impl Add<f64> for Dual {
    type Output = Self;

    fn add(self, rhs: f64) -> Self {
        Dual::new(self.value + rhs, self.tangent)
    }
}

impl Sub<f64> for Dual {
    type Output = Self;

    fn sub(self, rhs: f64) -> Self {
        Dual::new(self.value - rhs, self.tangent)
    }
}

impl Mul<f64> for Dual {
    type Output = Self;

    fn mul(self, rhs: f64) -> Self {
        Dual::new(self.value * rhs, self.tangent * rhs)
    }
}

impl Div<f64> for Dual {
    type Output = Self;

    fn div(self, rhs: f64) -> Self {
        Dual::new(self.value / rhs, self.tangent / rhs)
    }
}

impl Scalar for Dual {
    fn constant(v: f64) -> Self {
        Dual::new(v, 0.0)
    }

    fn value(self) -> f64 {
        self.value
    }

    fn sin(self) -> Self {
        Dual::new(self.value.sin(), self.tangent * self.value.cos())
    }

    fn cos(self) -> Self {
        Dual::new(self.value.cos(), -self.tangent * self.value.sin())
    }

    fn tanh(self) -> Self {
        let t = self.value.tanh();
        Dual::new(t, self.tangent * (1.0 - t * t))
    }

    fn exp(self) -> Self {
        let e = self.value.exp();
        Dual::new(e, self.tangent * e)
    }

    fn sqrt(self) -> Self {
        let s = self.value.sqrt();
        Dual::new(s, self.tangent * 0.5 / s)
    }

    fn powi(self, n: i32) -> Self {
        let d = if n == 0 {
            0.0
        } else {
            f64::from(n) * self.value.powi(n - 1)
        };
        Dual::new(self.value.powi(n), self.tangent * d)
    }

    fn powf(self, p: f64) -> Self {
        Dual::new(self.value.powf(p), self.tangent * p * self.value.powf(p - 1.0))
    }

    fn min(self, other: Self) -> Self {
        if self.value < other.value {
            self
        } else {
            other
        }
    }

    fn max(self, other: Self) -> Self {
        if self.value > other.value {
            self
        } else {
            other
        }
    }

    fn clamp(self, lo: f64, hi: f64) -> Self {
        let v = self.value;
        if v < lo {
            Dual::new(lo, 0.0)
        } else if v > hi {
            Dual::new(hi, 0.0)
        } else if v == lo || v == hi {
            Dual::new(v, 0.0)
        } else {
            self
        }
    }

    fn wrap_angle(self) -> Self {
        Dual::new(self.value - wrap_offset(self.value), self.tangent)
    }
}
