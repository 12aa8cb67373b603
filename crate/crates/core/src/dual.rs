//! Forward-mode dual numbers carrying three tangent directions.
//!
//! The belief/plausibility kernels are written once, generic over [`Real`],
//! and evaluated either on plain `f64` or on [`Dual3`] seeded with the
//! `(mu, sigma2, h)` directions to obtain exact partial derivatives.

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::special;

pub trait Real:
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
    fn exp(self) -> Self;
    fn exp_m1(self) -> Self;
    fn sqrt(self) -> Self;
    /// Complementary error function.
    fn erfc(self) -> Self;

    fn square(self) -> Self {
        self * self
    }
}

impl Real for f64 {
    #[inline]
    fn cst(v: f64) -> Self {
        v
    }
    #[inline]
    fn value(self) -> f64 {
        self
    }
    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }
    #[inline]
    fn exp_m1(self) -> Self {
        f64::exp_m1(self)
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn erfc(self) -> Self {
        special::erfc(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual3 {
    pub v: f64,
    pub d: [f64; 3],
}

impl Dual3 {
    pub fn constant(v: f64) -> Self {
        Dual3 { v, d: [0.0; 3] }
    }

    /// A variable seeded along tangent direction `dir`.
    pub fn var(v: f64, dir: usize) -> Self {
        let mut d = [0.0; 3];
        d[dir] = 1.0;
        Dual3 { v, d }
    }

    #[inline]
    fn chain(self, v: f64, dv: f64) -> Self {
        Dual3 {
            v,
            d: [self.d[0] * dv, self.d[1] * dv, self.d[2] * dv],
        }
    }
}

impl Add for Dual3 {
    type Output = Dual3;
    #[inline]
    fn add(self, o: Dual3) -> Dual3 {
        Dual3 {
            v: self.v + o.v,
            d: [self.d[0] + o.d[0], self.d[1] + o.d[1], self.d[2] + o.d[2]],
        }
    }
}

impl Sub for Dual3 {
    type Output = Dual3;
    #[inline]
    fn sub(self, o: Dual3) -> Dual3 {
        Dual3 {
            v: self.v - o.v,
            d: [self.d[0] - o.d[0], self.d[1] - o.d[1], self.d[2] - o.d[2]],
        }
    }
}

impl Mul for Dual3 {
    type Output = Dual3;
    #[inline]
    fn mul(self, o: Dual3) -> Dual3 {
        Dual3 {
            v: self.v * o.v,
            d: [
                self.d[0] * o.v + self.v * o.d[0],
                self.d[1] * o.v + self.v * o.d[1],
                self.d[2] * o.v + self.v * o.d[2],
            ],
        }
    }
}

impl Div for Dual3 {
    type Output = Dual3;
    #[inline]
    fn div(self, o: Dual3) -> Dual3 {
        let inv = 1.0 / o.v;
        let q = self.v * inv;
        Dual3 {
            v: q,
            d: [
                (self.d[0] - q * o.d[0]) * inv,
                (self.d[1] - q * o.d[1]) * inv,
                (self.d[2] - q * o.d[2]) * inv,
            ],
        }
    }
}

impl Neg for Dual3 {
    type Output = Dual3;
    #[inline]
    fn neg(self) -> Dual3 {
        Dual3 {
            v: -self.v,
            d: [-self.d[0], -self.d[1], -self.d[2]],
        }
    }
}

impl Add<f64> for Dual3 {
    type Output = Dual3;
    #[inline]
    fn add(self, o: f64) -> Dual3 {
        Dual3 { v: self.v + o, d: self.d }
    }
}

impl Sub<f64> for Dual3 {
    type Output = Dual3;
    #[inline]
    fn sub(self, o: f64) -> Dual3 {
        Dual3 { v: self.v - o, d: self.d }
    }
}

impl Mul<f64> for Dual3 {
    type Output = Dual3;
    #[inline]
    fn mul(self, o: f64) -> Dual3 {
        Dual3 {
            v: self.v * o,
            d: [self.d[0] * o, self.d[1] * o, self.d[2] * o],
        }
    }
}

impl Div<f64> for Dual3 {
    type Output = Dual3;
    #[inline]
    fn div(self, o: f64) -> Dual3 {
        self * (1.0 / o)
    }
}

impl Real for Dual3 {
    fn cst(v: f64) -> Self {
        Dual3::constant(v)
    }
    fn value(self) -> f64 {
        self.v
    }
    fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e)
    }
    fn exp_m1(self) -> Self {
        self.chain(self.v.exp_m1(), self.v.exp())
    }
    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s)
    }
    fn erfc(self) -> Self {
        let dv = -std::f64::consts::FRAC_2_SQRT_PI * (-self.v * self.v).exp();
        self.chain(special::erfc(self.v), dv)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd<F: Fn(f64) -> f64>(f: F, x: f64) -> f64 {
        let h = 1e-6;
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    #[test]
    fn elementary_derivatives_match_finite_differences() {
        let x0 = 0.37;
        let g = |x: Dual3| (x.square() * 3.0 + x.exp()).sqrt() / (x + 2.0) - x.erfc() * x.exp_m1();
        let gf = |x: f64| (3.0 * x * x + x.exp()).sqrt() / (x + 2.0) - special::erfc(x) * x.exp_m1();
        let out = g(Dual3::var(x0, 1));
        assert!((out.v - gf(x0)).abs() < 1e-15);
        assert!((out.d[1] - fd(gf, x0)).abs() < 1e-8);
        assert_eq!(out.d[0], 0.0);
        assert_eq!(out.d[2], 0.0);
    }
}
