//! Rayleigh quotient of the normal form.

use super::liouville::SchrodingerForm;
use super::problem::LeftBoundary;
use crate::error::{Error, Result};
use crate::grid::DiffOperator;
use crate::real::Real;

/// `(∫ v_ζ² + q v² dζ + τ v(0)²)/∫ v² dζ` for `v` sampled on `form.grid(v.len() − 1)`
/// (`τ` is the Robin slope of the left end, absent for Dirichlet).
///
/// Integrals are taken in the grid parameter `t` (Simpson), with `v_t` from
/// five-point differences, so both are accurate for the power-law behaviour at
/// the singular end.  Trial functions must vanish at a Dirichlet left end and at
/// the right end.
pub fn rayleigh_quotient<T: Real>(form: &SchrodingerForm<T>, v: &[T]) -> Result<T> {
    if v.len() < 5 || v.len() % 2 == 0 {
        return Err(Error::InvalidInput("trial samples must have an odd count of at least 5 (form.grid(n) has n+1 nodes)".into()));
    }
    let grid = form.grid(v.len() - 1)?;
    if grid.t.len() != v.len() {
        return Err(Error::InvalidInput("trial samples do not match the form grid".into()));
    }
    let n = v.len() - 1;
    let max = v.iter().fold(T::zero(), |m, x| m.max(x.abs()));
    if !(max > T::zero()) || !max.is_finite() {
        return Err(Error::NonAdmissibleTrial("trial function is zero or non-finite".into()));
    }
    let small = T::lit(1e-8) * max;
    if matches!(form.problem.left, LeftBoundary::Dirichlet) && v[0].abs() > small {
        return Err(Error::NonAdmissibleTrial(format!("v(0) = {} does not vanish", v[0].to_f64_lossy())));
    }
    if v[n].abs() > small {
        return Err(Error::NonAdmissibleTrial(format!("v(zeta_plus) = {} does not vanish", v[n].to_f64_lossy())));
    }
    if grid.singular_end {
        // Finite energy near an inverse-square end needs v = o(x^{1/2}).
        let j = n - 1;
        let bound = max * (grid.x[j] / form.zeta_plus).sqrt();
        if v[j].abs() > bound {
            return Err(Error::NonAdmissibleTrial("trial function does not decay at the singular end".into()));
        }
    }
    let vt = DiffOperator::new(&grid.t, 5)?.apply(v);
    let mut num = T::zero();
    let mut den = T::zero();
    for j in 0..=n {
        let zt = grid.zeta_t[j];
        if zt == T::zero() {
            continue;
        }
        let vz = vt[j] / zt;
        num = num + grid.weights[j] * (vz * vz + grid.q[j] * v[j] * v[j]) * zt;
        den = den + grid.weights[j] * v[j] * v[j] * zt;
    }
    if let Some(tau) = form.left_tau {
        num = num + tau * v[0] * v[0];
    }
    Ok(num / den)
}

impl<T: Real> SchrodingerForm<T> {
    /// Samples of `f(ζ)` on `self.grid(n)`.
    pub fn sample<F: Fn(T) -> T>(&self, n: usize, f: F) -> Result<Vec<T>> {
        Ok(self.grid(n)?.zeta.iter().map(|&z| f(z)).collect())
    }
}

/// Relative residual `‖−v″ + (q − Λ)v‖ / (|Λ|‖v‖)` in `L²(dζ)` of normal-form
/// samples on `form.grid(v.len() − 1)`, with derivatives from seven-point
/// differences in the grid parameter.  Equals the `1/κ`-weighted residual of
/// the original equation relative to `|Λ|‖w‖_κ`.
pub fn normal_residual<T: Real>(form: &SchrodingerForm<T>, v: &[T], lambda: T) -> Result<T> {
    let grid = form.grid(v.len() - 1)?;
    if grid.t.len() != v.len() {
        return Err(Error::InvalidInput("samples do not match the form grid".into()));
    }
    let d = DiffOperator::new(&grid.t, 7)?;
    let n = v.len() - 1;
    let vt = d.apply(v);
    let mut vz: Vec<T> = vt.iter().zip(&grid.zeta_t).map(|(a, zt)| if *zt > T::zero() { *a / *zt } else { T::zero() }).collect();
    if grid.zeta_t[n] == T::zero() {
        // Quartic extrapolation to the endpoint where dζ/dt vanishes.
        vz[n] = T::lit(5.0) * vz[n - 1] - T::lit(10.0) * vz[n - 2] + T::lit(10.0) * vz[n - 3] - T::lit(5.0) * vz[n - 4] + vz[n - 5];
    }
    let vzt = d.apply(&vz);
    let mut num = T::zero();
    let mut den = T::zero();
    for j in 1..n {
        let zt = grid.zeta_t[j];
        let r = -vzt[j] / zt + (grid.q[j] - lambda) * v[j];
        num = num + grid.weights[j] * r * r * zt;
        den = den + grid.weights[j] * v[j] * v[j] * zt;
    }
    Ok((num / den).sqrt() / lambda.abs().max(T::min_positive_value()))
}

/// `∫ v₁ v₂ dζ` for samples on `form.grid(n)` (equal to `∫ κ w₁ w₂ dz`).
pub fn normal_inner<T: Real>(grid: &super::NormalGrid<T>, v1: &[T], v2: &[T]) -> T {
    (0..grid.t.len()).fold(T::zero(), |acc, j| acc + grid.weights[j] * grid.zeta_t[j] * v1[j] * v2[j])
}
