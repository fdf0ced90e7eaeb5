//! Minimal forward-mode automatic differentiation.
//!
//! Copula log-densities are written once, generic over [`Scalar`], and
//! evaluated either on plain `f64` or on [`Dual2`], which carries the value
//! together with the first and second derivative along one seeded direction.

use std::ops::{Add, Div, Mul, Neg, Sub};

pub trait Scalar:
    Copy
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
    fn cst(v: f64) -> Self;
    fn value(self) -> f64;
    fn ln(self) -> Self;
    fn exp(self) -> Self;
    fn ln_1p(self) -> Self;
    fn exp_m1(self) -> Self;
    fn powf(self, e: f64) -> Self;
    fn sqrt(self) -> Self;
    fn recip(self) -> Self {
        Self::cst(1.0) / self
    }
    /// Self raised to a (possibly differentiated) exponent; requires self > 0.
    fn pow(self, e: Self) -> Self {
        (self.ln() * e).exp()
    }
    /// Standard normal quantile.
    fn norm_ppf(self) -> Self;
}

impl Scalar for f64 {
    fn cst(v: f64) -> Self {
        v
    }
    fn value(self) -> f64 {
        self
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln_1p(self) -> Self {
        f64::ln_1p(self)
    }
    fn exp_m1(self) -> Self {
        f64::exp_m1(self)
    }
    fn powf(self, e: f64) -> Self {
        f64::powf(self, e)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn norm_ppf(self) -> Self {
        crate::stats::norm_ppf(self)
    }
}

/// Value with first and second directional derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual2 {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Dual2 {
    pub fn var(v: f64) -> Self {
        Dual2 { v, d1: 1.0, d2: 0.0 }
    }

    /// Apply a scalar function given f, f', f'' at the current value.
    fn chain(self, f: f64, df: f64, ddf: f64) -> Self {
        Dual2 {
            v: f,
            d1: df * self.d1,
            d2: ddf * self.d1 * self.d1 + df * self.d2,
        }
    }
}

impl Add for Dual2 {
    type Output = Dual2;
    fn add(self, o: Dual2) -> Dual2 {
        Dual2 { v: self.v + o.v, d1: self.d1 + o.d1, d2: self.d2 + o.d2 }
    }
}

impl Sub for Dual2 {
    type Output = Dual2;
    fn sub(self, o: Dual2) -> Dual2 {
        Dual2 { v: self.v - o.v, d1: self.d1 - o.d1, d2: self.d2 - o.d2 }
    }
}

impl Mul for Dual2 {
    type Output = Dual2;
    fn mul(self, o: Dual2) -> Dual2 {
        Dual2 {
            v: self.v * o.v,
            d1: self.d1 * o.v + self.v * o.d1,
            d2: self.d2 * o.v + 2.0 * self.d1 * o.d1 + self.v * o.d2,
        }
    }
}

impl Div for Dual2 {
    type Output = Dual2;
    fn div(self, o: Dual2) -> Dual2 {
        let inv = 1.0 / o.v;
        let r = Dual2 { v: o.v, d1: o.d1, d2: o.d2 }.chain(inv, -inv * inv, 2.0 * inv * inv * inv);
        self * r
    }
}

impl Neg for Dual2 {
    type Output = Dual2;
    fn neg(self) -> Dual2 {
        Dual2 { v: -self.v, d1: -self.d1, d2: -self.d2 }
    }
}

impl Add<f64> for Dual2 {
    type Output = Dual2;
    fn add(self, o: f64) -> Dual2 {
        Dual2 { v: self.v + o, ..self }
    }
}

impl Sub<f64> for Dual2 {
    type Output = Dual2;
    fn sub(self, o: f64) -> Dual2 {
        Dual2 { v: self.v - o, ..self }
    }
}

impl Mul<f64> for Dual2 {
    type Output = Dual2;
    fn mul(self, o: f64) -> Dual2 {
        Dual2 { v: self.v * o, d1: self.d1 * o, d2: self.d2 * o }
    }
}

impl Div<f64> for Dual2 {
    type Output = Dual2;
    fn div(self, o: f64) -> Dual2 {
        self * (1.0 / o)
    }
}

impl Scalar for Dual2 {
    fn cst(v: f64) -> Self {
        Dual2 { v, d1: 0.0, d2: 0.0 }
    }
    fn value(self) -> f64 {
        self.v
    }
    fn ln(self) -> Self {
        let inv = 1.0 / self.v;
        self.chain(self.v.ln(), inv, -inv * inv)
    }
    fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e, e)
    }
    fn ln_1p(self) -> Self {
        let inv = 1.0 / (1.0 + self.v);
        self.chain(self.v.ln_1p(), inv, -inv * inv)
    }
    fn exp_m1(self) -> Self {
        let e = self.v.exp();
        self.chain(self.v.exp_m1(), e, e)
    }
    fn powf(self, e: f64) -> Self {
        let p = self.v.powf(e);
        self.chain(p, e * self.v.powf(e - 1.0), e * (e - 1.0) * self.v.powf(e - 2.0))
    }
    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * self.v))
    }
    fn norm_ppf(self) -> Self {
        // x = Φ⁻¹(u): dx/du = 1/φ(x), d²x/du² = x/φ(x)².
        let x = crate::stats::norm_ppf(self.v);
        let phi = crate::stats::norm_pdf(x);
        self.chain(x, 1.0 / phi, x / (phi * phi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f<S: Scalar>(x: S) -> S {
        (x * x + 1.0).ln() * x.exp() / x.sqrt() + x.powf(1.5) - x.ln_1p() * x.exp_m1()
    }

    #[test]
    fn dual_matches_central_differences() {
        let x = 0.7;
        let d = f(Dual2::var(x));
        let h = 1e-5;
        let fd1 = (f(x + h) - f(x - h)) / (2.0 * h);
        let fd2 = (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
        assert!((d.v - f(x)).abs() < 1e-14);
        assert!((d.d1 - fd1).abs() < 1e-7);
        assert!((d.d2 - fd2).abs() < 1e-4);
    }

    #[test]
    fn norm_ppf_derivative() {
        let u = 0.3;
        let d = Dual2::var(u).norm_ppf();
        let h = 1e-6;
        let fd = (crate::stats::norm_ppf(u + h) - crate::stats::norm_ppf(u - h)) / (2.0 * h);
        assert!((d.d1 - fd).abs() / fd < 1e-7);
    }
}
