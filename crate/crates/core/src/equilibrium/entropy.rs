//! Entropy laws `Σ(η)` as functions of `η = ρ^{γ-1}`.

use crate::error::{Error, Result};
use crate::quad::GaussLegendre;
use crate::real::Real;
use crate::series::Series;
use std::fmt::Debug;

/// An entropy law `S = Σ(η)`, `η = ρ^{γ-1}`.
pub trait EntropyLaw<T: Real>: Debug + Send + Sync {
    /// `Σ(η)`.
    fn sigma(&self, eta: T) -> T;
    /// `Σ′(η)`.
    fn sigma_prime(&self, eta: T) -> T;
    /// Taylor coefficients of `Σ` about `eta0` up to `order` (in powers of `η - η0`).
    fn sigma_series(&self, eta0: T, order: usize) -> Series<T>;
    /// Upper end of the range on which the law is defined.
    fn eta_max(&self) -> T {
        T::infinity()
    }
    /// `∫_0^η exp(Σ(η′)/c_v) dη′`.
    fn exp_integral(&self, eta: T, c_v: T) -> T;
    /// Whether `Σ` is constant (isentropic atmosphere).
    fn is_constant(&self) -> bool {
        false
    }
    /// Human-readable description.
    fn describe(&self) -> String;
}

/// `Σ ≡ s0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Isentropic<T> {
    pub s0: T,
}

impl<T: Real> Isentropic<T> {
    pub fn new(s0: T) -> Self {
        Self { s0 }
    }
}

impl<T: Real> EntropyLaw<T> for Isentropic<T> {
    fn sigma(&self, _eta: T) -> T {
        self.s0
    }
    fn sigma_prime(&self, _eta: T) -> T {
        T::zero()
    }
    fn sigma_series(&self, _eta0: T, order: usize) -> Series<T> {
        Series::constant(self.s0, order)
    }
    fn exp_integral(&self, eta: T, c_v: T) -> T {
        eta * (self.s0 / c_v).exp()
    }
    fn is_constant(&self) -> bool {
        true
    }
    fn describe(&self) -> String {
        format!("isentropic (S = {})", self.s0)
    }
}

/// `Σ(η) = s0 − β η`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearEntropy<T> {
    pub s0: T,
    pub beta: T,
}

impl<T: Real> LinearEntropy<T> {
    pub fn new(beta: T) -> Self {
        Self { s0: T::zero(), beta }
    }
}

impl<T: Real> EntropyLaw<T> for LinearEntropy<T> {
    fn sigma(&self, eta: T) -> T {
        self.s0 - self.beta * eta
    }
    fn sigma_prime(&self, _eta: T) -> T {
        -self.beta
    }
    fn sigma_series(&self, eta0: T, order: usize) -> Series<T> {
        let mut c = vec![T::zero(); order + 1];
        c[0] = self.sigma(eta0);
        if order >= 1 {
            c[1] = -self.beta;
        }
        Series::new(c)
    }
    fn exp_integral(&self, eta: T, c_v: T) -> T {
        let pre = (self.s0 / c_v).exp();
        if self.beta == T::zero() {
            return eta * pre;
        }
        // Cancellation-free near η = 0.
        -pre * (c_v / self.beta) * (-self.beta * eta / c_v).exp_m1()
    }
    fn is_constant(&self) -> bool {
        self.beta == T::zero()
    }
    fn describe(&self) -> String {
        format!("linear (S = {} - {} eta)", self.s0, self.beta)
    }
}

/// Monotone (Fritsch–Carlson) cubic interpolation of tabulated `(η, Σ)` pairs.
/// The table must start at `η = 0`.
#[derive(Clone, Debug)]
pub struct TabulatedEntropy<T> {
    eta: Vec<T>,
    sigma: Vec<T>,
    slope: Vec<T>,
    /// Cumulative `∫_0^{η_k} exp(Σ/c_v)` at knots, cached per `c_v`.
    cum: Vec<T>,
    cum_cv: T,
    gl: GaussLegendre<T>,
}

impl<T: Real> TabulatedEntropy<T> {
    /// Build from knots; `c_v` is used to cache the integral of `exp(Σ/c_v)`.
    pub fn new(eta: Vec<T>, sigma: Vec<T>, c_v: T) -> Result<Self> {
        Self::validate(&eta, &sigma).map_err(|d| Error::InvalidInput(d.join("; ")))?;
        let n = eta.len();
        let h: Vec<T> = (0..n - 1).map(|k| eta[k + 1] - eta[k]).collect();
        let del: Vec<T> = (0..n - 1).map(|k| (sigma[k + 1] - sigma[k]) / h[k]).collect();
        let mut m = vec![T::zero(); n];
        if n == 2 {
            m[0] = del[0];
            m[1] = del[0];
        } else {
            for k in 1..n - 1 {
                if del[k - 1] * del[k] > T::zero() {
                    let w1 = T::lit(2.0) * h[k] + h[k - 1];
                    let w2 = h[k] + T::lit(2.0) * h[k - 1];
                    m[k] = (w1 + w2) / (w1 / del[k - 1] + w2 / del[k]);
                }
            }
            m[0] = end_slope(h[0], h[1], del[0], del[1]);
            m[n - 1] = end_slope(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
        }
        let mut t = Self {
            eta,
            sigma,
            slope: m,
            cum: Vec::new(),
            cum_cv: c_v,
            gl: GaussLegendre::new(16),
        };
        let mut cum = vec![T::zero(); n];
        for k in 0..n - 1 {
            let (a, b) = (t.eta[k], t.eta[k + 1]);
            cum[k + 1] = cum[k] + t.gl.integrate(a, b, |x| (t.sigma(x) / c_v).exp());
        }
        t.cum = cum;
        Ok(t)
    }

    /// Diagnostics for a candidate table (empty when valid).
    pub fn validate(eta: &[T], sigma: &[T]) -> std::result::Result<(), Vec<String>> {
        let mut d = Vec::new();
        if eta.len() != sigma.len() {
            d.push("entropy table columns have different lengths".to_string());
        }
        if eta.len() < 2 {
            d.push("entropy table needs at least two rows".to_string());
        }
        if let Some(&e0) = eta.first() {
            if e0 != T::zero() {
                d.push(format!("entropy table must start at eta = 0 (found {e0})"));
            }
        }
        if eta.windows(2).any(|w| !(w[1] > w[0])) {
            d.push("entropy table eta column must be strictly increasing".to_string());
        }
        if eta.iter().chain(sigma.iter()).any(|v| !v.is_finite()) {
            d.push("entropy table contains non-finite values".to_string());
        }
        if d.is_empty() {
            Ok(())
        } else {
            Err(d)
        }
    }

    pub fn knots(&self) -> (&[T], &[T]) {
        (&self.eta, &self.sigma)
    }

    fn segment(&self, x: T) -> usize {
        let n = self.eta.len();
        match self.eta.binary_search_by(|v| v.partial_cmp(&x).unwrap_or(std::cmp::Ordering::Less)) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        }
    }

    /// Cubic coefficients of segment `k` in powers of `(η - η_k)`.
    fn cubic(&self, k: usize) -> [T; 4] {
        let h = self.eta[k + 1] - self.eta[k];
        let del = (self.sigma[k + 1] - self.sigma[k]) / h;
        let (m0, m1) = (self.slope[k], self.slope[k + 1]);
        [
            self.sigma[k],
            m0,
            (T::lit(3.0) * del - T::lit(2.0) * m0 - m1) / h,
            (m0 + m1 - T::lit(2.0) * del) / (h * h),
        ]
    }
}

fn end_slope<T: Real>(h0: T, h1: T, d0: T, d1: T) -> T {
    let two = T::lit(2.0);
    let mut m = ((two * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if m * d0 <= T::zero() {
        m = T::zero();
    } else if d0 * d1 <= T::zero() && m.abs() > (T::lit(3.0) * d0).abs() {
        m = T::lit(3.0) * d0;
    }
    m
}

impl<T: Real> EntropyLaw<T> for TabulatedEntropy<T> {
    fn sigma(&self, eta: T) -> T {
        let k = self.segment(eta);
        let c = self.cubic(k);
        let t = eta - self.eta[k];
        ((c[3] * t + c[2]) * t + c[1]) * t + c[0]
    }
    fn sigma_prime(&self, eta: T) -> T {
        let k = self.segment(eta);
        let c = self.cubic(k);
        let t = eta - self.eta[k];
        (T::lit(3.0) * c[3] * t + T::lit(2.0) * c[2]) * t + c[1]
    }
    fn sigma_series(&self, eta0: T, order: usize) -> Series<T> {
        let k = self.segment(eta0);
        let c = self.cubic(k);
        let t = eta0 - self.eta[k];
        let three = T::lit(3.0);
        let coeffs = [
            ((c[3] * t + c[2]) * t + c[1]) * t + c[0],
            (three * c[3] * t + T::lit(2.0) * c[2]) * t + c[1],
            three * c[3] * t + c[2],
            c[3],
        ];
        Series::new((0..=order).map(|j| if j < 4 { coeffs[j] } else { T::zero() }).collect())
    }
    fn eta_max(&self) -> T {
        self.eta[self.eta.len() - 1]
    }
    fn exp_integral(&self, eta: T, c_v: T) -> T {
        if c_v != self.cum_cv {
            // Uncached heat capacity: integrate from scratch.
            let k = self.segment(eta);
            let mut acc = T::zero();
            for j in 0..k {
                acc = acc + self.gl.integrate(self.eta[j], self.eta[j + 1], |x| (self.sigma(x) / c_v).exp());
            }
            return acc + self.gl.integrate(self.eta[k], eta, |x| (self.sigma(x) / c_v).exp());
        }
        let k = self.segment(eta);
        self.cum[k] + self.gl.integrate(self.eta[k], eta, |x| (self.sigma(x) / c_v).exp())
    }
    fn is_constant(&self) -> bool {
        self.sigma.iter().all(|&s| s == self.sigma[0])
    }
    fn describe(&self) -> String {
        format!("table ({} knots on [0, {}])", self.eta.len(), self.eta_max())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_integral_matches_quadrature() {
        let law = LinearEntropy { s0: 0.2, beta: 0.5 };
        let gl = GaussLegendre::<f64>::new(20);
        for &eta in &[1e-12, 1e-3, 0.3, 2.0] {
            let q = gl.integrate(0.0, eta, |x| (law.sigma(x) / 1.3).exp());
            assert!((law.exp_integral(eta, 1.3) / q - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn table_reproduces_linear_data_and_is_monotone() {
        let eta: Vec<f64> = (0..11).map(|i| i as f64 * 0.1).collect();
        let sig: Vec<f64> = eta.iter().map(|e| -0.5 * e).collect();
        let t = TabulatedEntropy::new(eta, sig, 1.0).unwrap();
        for &x in &[0.0, 0.05, 0.37, 0.999] {
            assert!((t.sigma(x) + 0.5 * x).abs() < 1e-14);
            assert!((t.sigma_prime(x) + 0.5).abs() < 1e-12);
        }
        let lin = LinearEntropy::new(0.5);
        assert!((t.exp_integral(0.73, 1.0) / lin.exp_integral(0.73, 1.0) - 1.0).abs() < 1e-13);
        let s = t.sigma_series(0.42, 5);
        assert!((s.coeff(0) + 0.21).abs() < 1e-14 && s.coeff(4) == 0.0);
    }

    #[test]
    fn table_validation() {
        assert!(TabulatedEntropy::<f64>::validate(&[0.0, 0.2, 0.1], &[0.0, 0.0, 0.0]).is_err());
        assert!(TabulatedEntropy::<f64>::validate(&[0.1, 0.2], &[0.0, 0.0]).is_err());
        assert!(TabulatedEntropy::<f64>::validate(&[0.0, 0.2], &[0.0, 0.0]).is_ok());
    }

    #[test]
    fn monotone_data_gives_monotone_interpolant() {
        let eta = vec![0.0, 0.1, 0.15, 0.6, 1.0];
        let sig = vec![0.0, -0.01, -0.5, -0.55, -2.0];
        let t = TabulatedEntropy::new(eta, sig, 1.0).unwrap();
        let mut prev = t.sigma(0.0);
        for i in 1..=1000 {
            let v = t.sigma(i as f64 / 1000.0);
            assert!(v <= prev + 1e-15);
            prev = v;
        }
    }
}
