//! Scalar types the expression evaluator is generic over.
//!
//! `f64` is the plain case. [`Dual`] adds one infinitesimal perturbation and
//! nests: `Dual<Dual<f64>>` carries a mixed second derivative, three levels a
//! third derivative, and so on.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

pub trait Scalar:
    Copy
    + Debug
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(v: f64) -> Self;
    /// Real part at the bottom of the nesting.
    fn value(&self) -> f64;
    /// True when every component, real and infinitesimal, is zero.
    fn is_zero(&self) -> bool;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn tan(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn atan(self) -> Self;
    fn powi(self, n: i32) -> Self;
    fn powf(self, e: Self) -> Self;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }
    fn one() -> Self {
        Self::from_f64(1.0)
    }
}

impl Scalar for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn value(&self) -> f64 {
        *self
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn tan(self) -> Self {
        f64::tan(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn atan(self) -> Self {
        f64::atan(self)
    }
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
    fn powf(self, e: Self) -> Self {
        f64::powf(self, e)
    }
}

/// First-order dual number `re + eps·ε` with `ε² = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual<T> {
    pub re: T,
    pub eps: T,
}

impl<T: Scalar> Dual<T> {
    pub fn new(re: T, eps: T) -> Self {
        Self { re, eps }
    }

    pub fn constant(re: T) -> Self {
        Self { re, eps: T::zero() }
    }

    /// A seeded variable: unit perturbation in this level.
    pub fn variable(re: T) -> Self {
        Self { re, eps: T::one() }
    }
}

impl<T: Scalar> Add for Dual<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Dual::new(self.re + o.re, self.eps + o.eps)
    }
}

impl<T: Scalar> Sub for Dual<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Dual::new(self.re - o.re, self.eps - o.eps)
    }
}

impl<T: Scalar> Mul for Dual<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Dual::new(self.re * o.re, self.re * o.eps + self.eps * o.re)
    }
}

impl<T: Scalar> Div for Dual<T> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let q = self.re / o.re;
        Dual::new(q, (self.eps - q * o.eps) / o.re)
    }
}

impl<T: Scalar> Neg for Dual<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Dual::new(-self.re, -self.eps)
    }
}

impl<T: Scalar> Scalar for Dual<T> {
    fn from_f64(v: f64) -> Self {
        Dual::constant(T::from_f64(v))
    }
    fn value(&self) -> f64 {
        self.re.value()
    }
    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.eps.is_zero()
    }
    fn sin(self) -> Self {
        Dual::new(self.re.sin(), self.re.cos() * self.eps)
    }
    fn cos(self) -> Self {
        Dual::new(self.re.cos(), -(self.re.sin() * self.eps))
    }
    fn tan(self) -> Self {
        let t = self.re.tan();
        Dual::new(t, (T::one() + t * t) * self.eps)
    }
    fn exp(self) -> Self {
        let e = self.re.exp();
        Dual::new(e, e * self.eps)
    }
    fn ln(self) -> Self {
        Dual::new(self.re.ln(), self.eps / self.re)
    }
    fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        Dual::new(s, self.eps / (T::from_f64(2.0) * s))
    }
    fn atan(self) -> Self {
        Dual::new(self.re.atan(), self.eps / (T::one() + self.re * self.re))
    }
    fn powi(self, n: i32) -> Self {
        if n == 0 {
            return Dual::constant(T::one());
        }
        let lower = self.re.powi(n - 1);
        Dual::new(lower * self.re, T::from_f64(n as f64) * lower * self.eps)
    }
    fn powf(self, e: Self) -> Self {
        let p = self.re.powf(e.re);
        let mut eps = e.re * self.re.powf(e.re - T::one()) * self.eps;
        // the log term only exists when the exponent itself is perturbed
        if !e.eps.is_zero() {
            eps = eps + p * self.re.ln() * e.eps;
        }
        Dual::new(p, eps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_duals_give_third_derivative_of_sine() {
        type D3 = Dual<Dual<Dual<f64>>>;
        let x = 0.7;
        let seed = D3::new(
            Dual::new(Dual::variable(x), Dual::constant(1.0)),
            Dual::new(Dual::constant(1.0), Dual::constant(0.0)),
        );
        let y = seed.sin();
        assert!((y.re.re.re - x.sin()).abs() < 1e-15);
        assert!((y.re.re.eps - x.cos()).abs() < 1e-15);
        assert!((y.re.eps.eps + x.sin()).abs() < 1e-15);
        assert!((y.eps.eps.eps + x.cos()).abs() < 1e-15);
    }

    #[test]
    fn powf_with_constant_exponent_ignores_log_of_negative_base() {
        let x = Dual::variable(-2.0);
        let y = x.powf(Dual::constant(3.0));
        assert_eq!(y.re, -8.0);
        assert_eq!(y.eps, 12.0);
    }
}
