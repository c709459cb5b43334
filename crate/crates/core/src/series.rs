//! Truncated power series arithmetic.
//!
//! Used for exact (automatic) Taylor expansion of the analytic-in-u background
//! fields: local expansions for the Liouville potential, and the vacuum-contact
//! expansions that feed the Frobenius recursion.

use crate::real::Real;
use std::ops::{Add, Mul, Neg, Sub};

/// Power series `Σ_{k=0}^{order} c_k x^k`, truncated at `order`.
#[derive(Clone, Debug, PartialEq)]
pub struct Series<T> {
    c: Vec<T>,
}

impl<T: Real> Series<T> {
    /// Series from its coefficients (at least one).
    pub fn new(c: Vec<T>) -> Self {
        assert!(!c.is_empty(), "a series needs at least one coefficient");
        Self { c }
    }

    pub fn zero(order: usize) -> Self {
        Self { c: vec![T::zero(); order + 1] }
    }

    pub fn constant(v: T, order: usize) -> Self {
        let mut s = Self::zero(order);
        s.c[0] = v;
        s
    }

    /// The independent variable shifted by `v0`: `v0 + x`.
    pub fn variable(v0: T, order: usize) -> Self {
        let mut s = Self::constant(v0, order);
        if order >= 1 {
            s.c[1] = T::one();
        }
        s
    }

    pub fn order(&self) -> usize {
        self.c.len() - 1
    }

    pub fn coeffs(&self) -> &[T] {
        &self.c
    }

    /// Coefficient `c_k`, zero beyond the truncation order.
    pub fn coeff(&self, k: usize) -> T {
        self.c.get(k).copied().unwrap_or_else(T::zero)
    }

    pub fn value(&self) -> T {
        self.c[0]
    }

    /// Truncate (or zero-pad) to the given order.
    pub fn with_order(&self, order: usize) -> Self {
        let mut c = self.c.clone();
        c.resize(order + 1, T::zero());
        Self { c }
    }

    pub fn scale(&self, k: T) -> Self {
        Self { c: self.c.iter().map(|&v| v * k).collect() }
    }

    pub fn add_scalar(&self, k: T) -> Self {
        let mut s = self.clone();
        s.c[0] = s.c[0] + k;
        s
    }

    /// `k`-th derivative value at the expansion point: `k! c_k`.
    pub fn derivative_at_origin(&self, k: usize) -> T {
        let mut f = T::one();
        for j in 2..=k {
            f = f * T::from_count(j);
        }
        self.coeff(k) * f
    }

    /// Multiplicative inverse; requires `c_0 ≠ 0`.
    pub fn recip(&self) -> Self {
        let n = self.c.len();
        let a0 = self.c[0];
        let mut b = vec![T::zero(); n];
        b[0] = T::one() / a0;
        for k in 1..n {
            let mut acc = T::zero();
            for j in 1..=k {
                acc = acc + self.c[j] * b[k - j];
            }
            b[k] = -acc / a0;
        }
        Self { c: b }
    }

    pub fn div(&self, other: &Self) -> Self {
        self * &other.recip()
    }

    pub fn exp(&self) -> Self {
        let n = self.c.len();
        let mut b = vec![T::zero(); n];
        b[0] = self.c[0].exp();
        for k in 1..n {
            let mut acc = T::zero();
            for j in 1..=k {
                acc = acc + T::from_count(j) * self.c[j] * b[k - j];
            }
            b[k] = acc / T::from_count(k);
        }
        Self { c: b }
    }

    /// Natural logarithm; requires `c_0 > 0`.
    pub fn ln(&self) -> Self {
        let n = self.c.len();
        let a0 = self.c[0];
        let mut b = vec![T::zero(); n];
        b[0] = a0.ln();
        for k in 1..n {
            let mut acc = T::zero();
            for j in 1..k {
                acc = acc + T::from_count(j) * b[j] * self.c[k - j];
            }
            b[k] = (self.c[k] - acc / T::from_count(k)) / a0;
        }
        Self { c: b }
    }

    /// Real power; requires `c_0 > 0` (Miller's recurrence).
    pub fn powf(&self, p: T) -> Self {
        let n = self.c.len();
        let a0 = self.c[0];
        let mut b = vec![T::zero(); n];
        b[0] = a0.powf(p);
        for k in 1..n {
            let kk = T::from_count(k);
            let mut acc = T::zero();
            for j in 1..=k {
                let jj = T::from_count(j);
                acc = acc + ((p + T::one()) * jj - kk) * self.c[j] * b[k - j];
            }
            b[k] = acc / (kk * a0);
        }
        Self { c: b }
    }

    pub fn sqrt(&self) -> Self {
        self.powf(T::lit(0.5))
    }

    /// Derivative with respect to the expansion variable (order drops by one).
    pub fn derivative(&self) -> Self {
        if self.c.len() == 1 {
            return Self::zero(0);
        }
        Self {
            c: (1..self.c.len()).map(|k| T::from_count(k) * self.c[k]).collect(),
        }
    }

    /// Antiderivative with constant term `c0` (order rises by one).
    pub fn integral(&self, c0: T) -> Self {
        let mut c = Vec::with_capacity(self.c.len() + 1);
        c.push(c0);
        for (k, &v) in self.c.iter().enumerate() {
            c.push(v / T::from_count(k + 1));
        }
        Self { c }
    }

    /// Composition `self(inner(x))`; `inner` must have zero constant term.
    pub fn compose(&self, inner: &Self) -> Self {
        let order = self.order().min(inner.order());
        let inner = inner.with_order(order);
        let mut inner0 = inner.clone();
        inner0.c[0] = T::zero();
        let mut acc = Self::constant(self.c[self.c.len() - 1], order);
        for k in (0..self.c.len() - 1).rev() {
            acc = (&acc * &inner0).add_scalar(self.c[k]);
        }
        acc
    }

    /// Compositional inverse `g` with `self(g(x)) = x`; requires `c_0 = 0`, `c_1 ≠ 0`.
    pub fn revert(&self) -> Self {
        let n = self.order();
        assert!(n >= 1, "reversion needs order >= 1");
        let mut g = Self::zero(n);
        g.c[1] = T::one() / self.c[1];
        for k in 2..=n {
            let fg = self.with_order(n).compose(&g);
            g.c[k] = -fg.c[k] / self.c[1];
        }
        g
    }

    /// Drop the constant term and divide by `x` (order drops by one).
    pub fn shift_down(&self) -> Self {
        if self.c.len() == 1 {
            return Self::zero(0);
        }
        Self { c: self.c[1..].to_vec() }
    }

    /// Evaluate at `x` by Horner's rule.
    pub fn eval(&self, x: T) -> T {
        self.c.iter().rev().fold(T::zero(), |acc, &v| acc * x + v)
    }
}

impl<'a, T: Real> Add for &'a Series<T> {
    type Output = Series<T>;
    fn add(self, o: Self) -> Series<T> {
        let n = self.c.len().min(o.c.len());
        Series { c: (0..n).map(|k| self.c[k] + o.c[k]).collect() }
    }
}

impl<'a, T: Real> Sub for &'a Series<T> {
    type Output = Series<T>;
    fn sub(self, o: Self) -> Series<T> {
        let n = self.c.len().min(o.c.len());
        Series { c: (0..n).map(|k| self.c[k] - o.c[k]).collect() }
    }
}

impl<'a, T: Real> Mul for &'a Series<T> {
    type Output = Series<T>;
    fn mul(self, o: Self) -> Series<T> {
        let n = self.c.len().min(o.c.len());
        let mut c = vec![T::zero(); n];
        for (i, &a) in self.c.iter().take(n).enumerate() {
            if a == T::zero() {
                continue;
            }
            for (j, &b) in o.c.iter().take(n - i).enumerate() {
                c[i + j] = c[i + j] + a * b;
            }
        }
        Series { c }
    }
}

impl<'a, T: Real> Neg for &'a Series<T> {
    type Output = Series<T>;
    fn neg(self) -> Series<T> {
        Series { c: self.c.iter().map(|&v| -v).collect() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn exp_ln_roundtrip() {
        let s = Series::new(vec![0.3, 1.2, -0.7, 0.25, 0.1]);
        let back = s.exp().ln();
        for k in 0..5 {
            assert!(close(back.coeff(k), s.coeff(k), 1e-14));
        }
    }

    #[test]
    fn exp_of_variable_is_exponential_series() {
        let e = Series::<f64>::variable(0.0, 6).exp();
        let mut f = 1.0;
        for k in 0..=6 {
            if k > 0 {
                f *= k as f64;
            }
            assert!(close(e.coeff(k), 1.0 / f, 1e-15));
        }
    }

    #[test]
    fn powf_matches_binomial() {
        // (1 + x)^{2.5}
        let p = Series::<f64>::variable(1.0, 5).powf(2.5);
        let mut expect = 1.0;
        for k in 0..=5 {
            assert!(close(p.coeff(k), expect, 1e-14), "k={k}");
            expect *= (2.5 - k as f64) / (k as f64 + 1.0);
        }
    }

    #[test]
    fn recip_times_self_is_one() {
        let s = Series::new(vec![2.0, -1.0, 0.5, 3.0]);
        let one = &s * &s.recip();
        assert!(close(one.coeff(0), 1.0, 1e-15));
        for k in 1..4 {
            assert!(one.coeff(k).abs() < 1e-14);
        }
    }

    #[test]
    fn reversion_inverts_sine_like_series() {
        // f = x + x^2/2 + x^3/3 ... (= -ln(1-x)); inverse is 1 - e^{-y}
        let f = Series::new(vec![0.0, 1.0, 0.5, 1.0 / 3.0, 0.25, 0.2]);
        let g = f.revert();
        let expect = [0.0, 1.0, -0.5, 1.0 / 6.0, -1.0 / 24.0, 1.0 / 120.0];
        for k in 0..6 {
            assert!(close(g.coeff(k), expect[k], 1e-14), "k={k}");
        }
        let id = f.compose(&g);
        assert!(close(id.coeff(1), 1.0, 1e-14));
        for k in 2..6 {
            assert!(id.coeff(k).abs() < 1e-13);
        }
    }

    #[test]
    fn derivative_and_integral() {
        let s = Series::new(vec![1.0, 2.0, 3.0, 4.0]);
        let d = s.derivative();
        assert_eq!(d.coeffs(), &[2.0, 6.0, 12.0]);
        let i = d.integral(1.0);
        assert_eq!(i.coeffs(), s.coeffs());
        assert_eq!(s.derivative_at_origin(3), 24.0);
        assert!(close(s.eval(0.5), 1.0 + 1.0 + 0.75 + 0.5, 1e-15));
    }
}
