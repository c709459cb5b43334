//! The first-order system for the vertical displacement `w` and the
//! Lagrangian pressure perturbation `η = −c²ρ(l u + dw/dz)`:
//!
//! ```text
//! d/dz (w, η)ᵀ = −A(z, λ) (w, η)ᵀ,
//! A₁₁ = −l²g/λ,  A₁₂ = (1 − l²c²/λ)/(c²ρ),
//! A₂₁ = (l²g²/λ)(1 − λ²/(l²g²)) ρ,  A₂₂ = l²g/λ.
//! ```
//!
//! `A` is trace-free, so the Wronskian of any two solutions is constant in `z`.
//! With the depth `s = z₊ − z` and `η = s^ν η̃` the scaled unknown
//! `X = (w, η̃)` solves `s dX/ds = M(s) X` with `M` analytic at `s = 0` and
//! `M(0) = [[0, ν/(g C_ρ)], [0, −ν]]` (exponents `0, −ν`).  All integrations
//! run in `t = ln s`, where this system is smooth and non-stiff.
//!
//! * [`frobenius_series`]: fundamental matrix at the vacuum boundary.
//! * [`dispersion_value`]: `D(λ) = w_O η_S − η_O w_S`, the Wronskian of the
//!   solution `φ_O1` regular at the ground (`w(0) = 0`) and the solution
//!   `φ_S1` bounded at the vacuum.
//! * [`scan_and_refine`]: sign-change scan of `D` and root refinement.
//! * [`reconstruct_eigenfunction`], [`apply_operator`],
//!   [`kernel_family_isentropic`], [`resolvent_solve`]: see [`modefn`].

mod modefn;

#[cfg(test)]
mod tests;

pub use modefn::{
    apply_operator, fit_exponent, kernel_family_isentropic, reconstruct_eigenfunction, reconstruct_with, resolvent_solve,
    weighted_inner, write_mode_function_csv, Forcing, ModeFunction, ResolventProblem, GLUE_TOL,
};

use std::cell::RefCell;
use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;

use crate::equilibrium::EquilibriumProfile;
use crate::error::{Error, Result};
use crate::fixedpoint::ModeSpec;
use crate::ode::{integrate_to_points, OdeOptions};
use crate::real::Real;
use crate::roots::brent_with_values;
use crate::series::Series;
use crate::slcore::{csv_err, fmt_num};

/// Default truncation order of the Frobenius series.
pub const DEFAULT_ORDER: usize = 8;
/// Series start offset relative to `z₊`.
pub const S0_FACTOR: f64 = 1e-6;
/// Relative tolerance of the regular-point integrations.
pub const ODE_RTOL: f64 = 1e-10;
/// Half-width of the skipped window around `λ = l·g`, relative to `l·g`.
pub const SKIP_HALF_WIDTH: f64 = 1e-6;
/// Relative tolerance of refined roots.
pub const ROOT_RTOL: f64 = 1e-12;
/// Roots closer than this (relative) are merged.
pub const ROOT_ISOLATION: f64 = 1e-10;
/// Simplicity threshold: `|dD/dλ|` relative to the bracket slope scale.
pub const SIMPLICITY_TOL: f64 = 1e-8;
/// Smallest accepted scan grid.
pub const MIN_GRID: usize = 16;

/// 2×2 matrix, row-major.
pub type Mat2<T> = [[T; 2]; 2];

fn mat_mul<T: Real>(a: &Mat2<T>, b: &Mat2<T>) -> Mat2<T> {
    let mut c = [[T::zero(); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

fn mat_add<T: Real>(a: &Mat2<T>, b: &Mat2<T>) -> Mat2<T> {
    [[a[0][0] + b[0][0], a[0][1] + b[0][1]], [a[1][0] + b[1][0], a[1][1] + b[1][1]]]
}

fn mat_vec<T: Real>(a: &Mat2<T>, x: &[T; 2]) -> [T; 2] {
    [a[0][0] * x[0] + a[0][1] * x[1], a[1][0] * x[0] + a[1][1] * x[1]]
}

/// The system `(w, η)′ = −A (w, η)` at a fixed spectral parameter.
#[derive(Clone, Debug)]
pub struct FirstOrderSystem<T: Real> {
    pub profile: Arc<EquilibriumProfile<T>>,
    pub spec: ModeSpec<T>,
    pub lambda: T,
}

/// Background quantities at depth `s ≥ 0` that stay finite at the vacuum.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Background<T> {
    pub rho: T,
    /// `ρ / s^ν` (equal to `C_ρ` at `s = 0`).
    pub rho_hat: T,
    pub c2: T,
    /// `c² / s` (limit at `s = 0`).
    pub c2_hat: T,
    /// `c² / H[ρ] = −c² ρ′/ρ`.
    pub c2_over_h: T,
}

pub(crate) fn background<T: Real>(profile: &EquilibriumProfile<T>, s: T) -> Result<Background<T>> {
    let nu = profile.nu();
    let gp = profile.params;
    let th = profile.theta_at_depth(s)?;
    let e = profile.e_of_theta(th);
    let up = profile.du_dtheta(th);
    let c2 = gp.gamma * th * e;
    let (rho_hat, c2_hat) = if s > T::zero() {
        (th.powf(nu) / s.powf(nu), c2 / s)
    } else {
        // θ ≈ g s / u′(0): c² ≈ γ E(0) g s / u′(0).
        (profile.c_rho, gp.gamma * e * gp.g / up)
    };
    Ok(Background { rho: th.powf(nu), rho_hat, c2, c2_hat, c2_over_h: gp.gamma * nu * gp.g * e / up })
}

impl<T: Real> FirstOrderSystem<T> {
    fn l2(&self) -> T {
        self.spec.l * self.spec.l
    }

    fn g(&self) -> T {
        self.profile.params.g
    }

    /// `A₁₁ = −l²g/λ` (constant).
    pub fn a11(&self) -> T {
        -self.l2() * self.g() / self.lambda
    }

    /// `A₂₂ = l²g/λ` (constant).
    pub fn a22(&self) -> T {
        self.l2() * self.g() / self.lambda
    }

    /// `A(z)` at height `z ∈ [0, z₊)`.
    pub fn matrix(&self, z: T) -> Result<Mat2<T>> {
        let f = self.profile.eval(z)?;
        let (l2, g, lam) = (self.l2(), self.g(), self.lambda);
        Ok([
            [self.a11(), (T::one() - l2 * f.c2 / lam) / (f.c2 * f.rho)],
            [(l2 * g * g / lam) * (T::one() - lam * lam / (l2 * g * g)) * f.rho, self.a22()],
        ])
    }

    /// Turning factor `Q(z) = 1 − l²c²(z)/λ`.
    pub fn turning_factor(&self, z: T) -> Result<T> {
        let f = self.profile.eval(z)?;
        Ok(T::one() - self.l2() * f.c2 / self.lambda)
    }

    /// `M(s)` of the scaled system `s dX/ds = M X`, `X = (w, η/s^ν)`.
    pub fn scaled_matrix(&self, s: T) -> Result<Mat2<T>> {
        let b = background(&self.profile, s)?;
        let (l2, g, lam, nu) = (self.l2(), self.g(), self.lambda, self.profile.nu());
        let kg = l2 * g / lam;
        Ok([
            [-kg * s, (T::one() - l2 * b.c2 / lam) / (b.c2_hat * b.rho_hat)],
            [s * b.rho_hat * (l2 * g * g / lam - lam), kg * s - nu],
        ])
    }

    /// Taylor coefficients `M_0..M_order` of `M(s)` at the vacuum.
    pub fn scaled_series(&self, order: usize) -> Vec<Mat2<T>> {
        let vs = self.profile.vacuum_series(order);
        let (l2, g, lam, nu) = (self.l2(), self.g(), self.lambda, self.profile.nu());
        let kg = l2 * g / lam;
        let s = Series::variable(T::zero(), order);
        let r = vs.rho_hat.with_order(order);
        let c = vs.c2_hat.with_order(order);
        let num = (&(&s * &c).scale(-l2 / lam)).add_scalar(T::one());
        let m12 = &num * &(&c * &r).recip();
        let m21 = (&s * &r).scale(l2 * g * g / lam - lam);
        (0..=order)
            .map(|m| {
                let m11 = if m == 1 { -kg } else { T::zero() };
                let m22 = match m {
                    0 => -nu,
                    1 => kg,
                    _ => T::zero(),
                };
                [[m11, m12.coeff(m)], [m21.coeff(m), m22]]
            })
            .collect()
    }

    /// Integrate the scaled system in `t = ln s` from `(s0, x0)` through the
    /// depths `s_points` (each `> 0`), returning `X` at each.
    pub fn integrate_scaled(&self, s0: T, x0: [T; 2], s_points: &[T]) -> Result<Vec<[T; 2]>> {
        let err: RefCell<Option<Error>> = RefCell::new(None);
        let zp = self.profile.z_plus;
        let f = |t: T, x: &[T; 2]| match self.scaled_matrix(t.exp().min(zp)) {
            Ok(m) => mat_vec(&m, x),
            Err(e) => {
                err.borrow_mut().get_or_insert(e);
                [T::nan(); 2]
            }
        };
        let t_points: Vec<T> = s_points.iter().map(|s| s.ln()).collect();
        let out = integrate_to_points(f, s0.ln(), x0, &t_points, OdeOptions::with_rtol(T::lit(ODE_RTOL)));
        if let Some(e) = err.into_inner() {
            return Err(e);
        }
        out
    }
}

/// `X = (w, η̃)` → `(w, η)` at depth `s`.
pub fn unscale<T: Real>(nu: T, s: T, x: [T; 2]) -> [T; 2] {
    [x[0], x[1] * s.powf(nu)]
}

/// `(w, η)` → `X = (w, η̃)` at depth `s > 0`.
pub fn rescale<T: Real>(nu: T, s: T, y: [T; 2]) -> [T; 2] {
    [y[0], y[1] / s.powf(nu)]
}

/// Assemble the system at `λ`.
pub fn assemble_system<T: Real>(profile: &Arc<EquilibriumProfile<T>>, spec: &ModeSpec<T>, lambda: T) -> Result<FirstOrderSystem<T>> {
    if lambda == T::zero() || !lambda.is_finite() {
        return Err(Error::ZeroLambda);
    }
    Ok(FirstOrderSystem { profile: profile.clone(), spec: *spec, lambda })
}

/// The height where `l²c²(z) = λ` (`Q` changes sign), or `None` when
/// `λ ≥ l²c²(0)` (`Q > 0` everywhere) or `λ ≤ 0`.
pub fn turning_point<T: Real>(profile: &EquilibriumProfile<T>, spec: &ModeSpec<T>, lambda: T) -> Result<Option<T>> {
    let l2 = spec.l * spec.l;
    let zp = profile.z_plus;
    let top = l2 * profile.eval_depth(zp)?.c2;
    if !(lambda > T::zero()) || lambda >= top {
        return Ok(None);
    }
    // c² increases with depth; solve in s with c²(0) = 0.
    let mut failure = None;
    let f = |s: T| -> T {
        if s <= T::zero() {
            return -lambda;
        }
        match profile.eval_depth(s) {
            Ok(v) => l2 * v.c2 - lambda,
            Err(e) => {
                failure.get_or_insert(e);
                T::nan()
            }
        }
    };
    let r = brent_with_values(f, T::zero(), zp, -lambda, top - lambda, T::zero(), T::floor_tol(T::lit(1e-15)), 300);
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(Some(zp - r?.root))
}

/// Frobenius fundamental matrix `X = T (I + Σ P_m s^m) s^D`, `D = diag(0, −ν)`,
/// of the scaled system at the vacuum.
#[derive(Clone, Debug)]
pub struct FrobeniusSeries<T> {
    pub order: usize,
    pub nu: T,
    /// `P_1..P_K`.
    pub p_matrices: Vec<Mat2<T>>,
    /// Coefficients `N_0..N_{2K}` of `T⁻¹ M(s) T`.
    pub n_matrices: Vec<Mat2<T>>,
    /// `(0, −ν)`.
    pub exponents: (T, T),
    /// `T = [[1, −1/(g C_ρ)], [0, 1]]` (entry computed from the series of `M`).
    pub leading_transform: Mat2<T>,
    /// Evaluation offset from `z₊`.
    pub s0: T,
    /// `Some(ν)` when the second column needs a logarithmic term (integer `ν`).
    pub resonance: Option<T>,
}

fn build_series<T: Real>(sys: &FirstOrderSystem<T>, order: usize) -> FrobeniusSeries<T> {
    let nu = sys.profile.nu();
    let m = sys.scaled_series(2 * order);
    let t12 = -m[0][0][1] / nu;
    let tm: Mat2<T> = [[T::one(), t12], [T::zero(), T::one()]];
    let ti: Mat2<T> = [[T::one(), -t12], [T::zero(), T::one()]];
    let mut n: Vec<Mat2<T>> = m.iter().map(|mk| mat_mul(&ti, &mat_mul(mk, &tm))).collect();
    n[0] = [[T::zero(), T::zero()], [T::zero(), -nu]];
    let d = [T::zero(), -nu];
    let mut p: Vec<Mat2<T>> = vec![[[T::one(), T::zero()], [T::zero(), T::one()]]];
    let mut resonance = None;
    for mm in 1..=order {
        let mut r = n[mm];
        for k in 1..mm {
            r = mat_add(&r, &mat_mul(&n[k], &p[mm - k]));
        }
        let mut pm = [[T::zero(); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                let den = T::from_count(mm) + d[j] - d[i];
                if den.abs() < T::lit(1e-9) {
                    let scale = T::one() + r[0][0].abs() + r[1][1].abs();
                    if r[i][j].abs() > T::lit(1e-12) * scale {
                        resonance = Some(nu);
                    }
                    continue;
                }
                pm[i][j] = r[i][j] / den;
            }
        }
        p.push(pm);
    }
    FrobeniusSeries {
        order,
        nu,
        p_matrices: p[1..].to_vec(),
        n_matrices: n,
        exponents: (T::zero(), -nu),
        leading_transform: tm,
        s0: T::lit(S0_FACTOR) * sys.profile.z_plus,
        resonance,
    }
}

/// Frobenius series of order `K` at the vacuum.  Errors with
/// `ResonanceUnhandled` when `ν` is an integer and the second solution needs
/// a logarithmic term (the bounded solution never does; see [`dispersion_value`]).
pub fn frobenius_series<T: Real>(
    profile: &Arc<EquilibriumProfile<T>>,
    spec: &ModeSpec<T>,
    lambda: T,
    order: usize,
) -> Result<FrobeniusSeries<T>> {
    let sys = assemble_system(profile, spec, lambda)?;
    let fs = build_series(&sys, order.max(1));
    if let Some(nu) = fs.resonance {
        return Err(Error::ResonanceUnhandled { nu: nu.to_f64_lossy() });
    }
    Ok(fs)
}

impl<T: Real> FrobeniusSeries<T> {
    /// `T (I + Σ P_m s^m)` (without the `s^D` factor).
    pub fn holomorphic_part(&self, s: T) -> Mat2<T> {
        let mut z = [[T::one(), T::zero()], [T::zero(), T::one()]];
        let mut pw = T::one();
        for p in &self.p_matrices {
            pw = pw * s;
            for i in 0..2 {
                for j in 0..2 {
                    z[i][j] = z[i][j] + p[i][j] * pw;
                }
            }
        }
        mat_mul(&self.leading_transform, &z)
    }

    /// Scaled bounded solution `X = (w, η/s^ν)` of `φ_S1`.
    pub fn phi_s1_scaled(&self, s: T) -> [T; 2] {
        let h = self.holomorphic_part(s);
        [h[0][0], h[1][0]]
    }

    /// `φ_S1 = (w, η)`: `w → 1`, `η = O(s^{ν+1})`.
    pub fn phi_s1(&self, s: T) -> [T; 2] {
        unscale(self.nu, s, self.phi_s1_scaled(s))
    }

    /// `φ_S2 = (w, η)`: `w ≈ −s^{−ν}/(g C_ρ)`, `η → 1`.
    pub fn phi_s2(&self, s: T) -> Result<[T; 2]> {
        if let Some(nu) = self.resonance {
            return Err(Error::ResonanceUnhandled { nu: nu.to_f64_lossy() });
        }
        let h = self.holomorphic_part(s);
        Ok([h[0][1] * s.powf(-self.nu), h[1][1]])
    }

    /// Residual coefficients `E_m`, `m = K+1..2K`, of `s Z′ + Z D − N Z` for
    /// the truncated `Z = I + Σ P_m s^m` (lower orders vanish by construction).
    pub fn residual_coefficients(&self) -> Vec<Mat2<T>> {
        let k = self.order;
        let p = |j: usize| -> Mat2<T> {
            if j == 0 {
                [[T::one(), T::zero()], [T::zero(), T::one()]]
            } else {
                self.p_matrices[j - 1]
            }
        };
        ((k + 1)..=(2 * k))
            .map(|m| {
                let mut e = [[T::zero(); 2]; 2];
                for j in (m - k)..=m {
                    if j < self.n_matrices.len() && m - j <= k {
                        e = mat_add(&e, &mat_mul(&self.n_matrices[j], &p(m - j)));
                    }
                }
                e
            })
            .collect()
    }

    /// Max-norm of the truncation residual at depth `s` (first column, plus
    /// the second when it is available).
    pub fn residual(&self, s: T) -> T {
        let coeffs = self.residual_coefficients();
        let mut e = [[T::zero(); 2]; 2];
        let mut pw = s.powi(self.order as i32);
        for c in &coeffs {
            pw = pw * s;
            for i in 0..2 {
                for j in 0..2 {
                    e[i][j] = e[i][j] + c[i][j] * pw;
                }
            }
        }
        let cols = if self.resonance.is_some() { 1 } else { 2 };
        let mut r = T::zero();
        for row in &e {
            for v in &row[..cols] {
                r = r.max(v.abs());
            }
        }
        r
    }

    /// Relative residual `|s X′ − M(s) X| / |X|` of the truncated `φ_S1`
    /// against `M(s)` evaluated directly from the profile.
    pub fn direct_residual(&self, sys: &FirstOrderSystem<T>, s: T) -> Result<T> {
        let x = self.phi_s1_scaled(s);
        let mut dz = [[T::zero(); 2]; 2];
        let mut pw = T::one();
        for (m, p) in self.p_matrices.iter().enumerate() {
            pw = pw * s;
            for i in 0..2 {
                for j in 0..2 {
                    dz[i][j] = dz[i][j] + T::from_count(m + 1) * p[i][j] * pw;
                }
            }
        }
        let sd = mat_mul(&self.leading_transform, &dz);
        let mx = mat_vec(&sys.scaled_matrix(s)?, &x);
        let r = [sd[0][0] - mx[0], sd[1][0] - mx[1]];
        Ok((r[0] * r[0] + r[1] * r[1]).sqrt() / (x[0] * x[0] + x[1] * x[1]).sqrt())
    }
}

/// Solution `φ_O1` with `(w, η)(0) = (0, 1)` at `z_to ∈ [0, z₊)`.
pub fn integrate_regular<T: Real>(system: &FirstOrderSystem<T>, z_to: T) -> Result<[T; 2]> {
    integrate_between(system, T::zero(), [T::zero(), T::one()], z_to)
}

/// Transport a state `(w, η)` from `z_from` to `z_to` (both in `[0, z₊)`).
pub fn integrate_between<T: Real>(system: &FirstOrderSystem<T>, z_from: T, y: [T; 2], z_to: T) -> Result<[T; 2]> {
    let zp = system.profile.z_plus;
    for z in [z_from, z_to] {
        if !(z >= T::zero() && z < zp) {
            return Err(Error::OutOfDomain { z: z.to_f64_lossy(), z_plus: zp.to_f64_lossy() });
        }
    }
    let nu = system.profile.nu();
    let (s0, s1) = (zp - z_from, zp - z_to);
    if s0 == s1 {
        return Ok(y);
    }
    let x = system.integrate_scaled(s0, rescale(nu, s0, y), &[s1])?;
    Ok(unscale(nu, s1, x[0]))
}

/// The bounded solution `φ_S1` (series start at `s0`, then integration)
/// at depths `s` (ascending), in scaled variables.
pub(crate) fn phi_s1_scaled_at<T: Real>(sys: &FirstOrderSystem<T>, fs: &FrobeniusSeries<T>, depths: &[T]) -> Result<Vec<[T; 2]>> {
    let split = depths.iter().position(|&s| s > fs.s0).unwrap_or(depths.len());
    let mut out: Vec<[T; 2]> = depths[..split].iter().map(|&s| fs.phi_s1_scaled(s)).collect();
    if split < depths.len() {
        out.extend(sys.integrate_scaled(fs.s0, fs.phi_s1_scaled(fs.s0), &depths[split..])?);
    }
    Ok(out)
}

/// The ground solution `φ_O1` at depths `s` (descending, all `> 0`), in scaled variables.
pub(crate) fn phi_o1_scaled_at<T: Real>(sys: &FirstOrderSystem<T>, depths: &[T]) -> Result<Vec<[T; 2]>> {
    let zp = sys.profile.z_plus;
    let x0 = rescale(sys.profile.nu(), zp, [T::zero(), T::one()]);
    sys.integrate_scaled(zp, x0, depths)
}

fn check_skip<T: Real>(spec: &ModeSpec<T>, profile: &EquilibriumProfile<T>, lambda: T) -> Result<()> {
    let lg = spec.l * profile.params.g;
    if (lambda - lg).abs() <= T::lit(SKIP_HALF_WIDTH) * lg {
        return Err(Error::SkipPoint { lambda: lambda.to_f64_lossy() });
    }
    Ok(())
}

/// `D(z_m, λ) = w_O η_S − η_O w_S` at the matching height `z_m ∈ (0, z₊)`.
/// Since `A` is trace-free, `D` is independent of `z_m` up to integration error.
pub fn dispersion_value<T: Real>(profile: &Arc<EquilibriumProfile<T>>, spec: &ModeSpec<T>, lambda: T, z_m: T) -> Result<T> {
    let sys = assemble_system(profile, spec, lambda)?;
    check_skip(spec, profile, lambda)?;
    let zp = profile.z_plus;
    if !(z_m > T::zero() && z_m < zp) {
        return Err(Error::OutOfDomain { z: z_m.to_f64_lossy(), z_plus: zp.to_f64_lossy() });
    }
    let fs = build_series(&sys, DEFAULT_ORDER);
    let s_m = zp - z_m;
    let xs = phi_s1_scaled_at(&sys, &fs, &[s_m])?[0];
    let xo = phi_o1_scaled_at(&sys, &[s_m])?[0];
    Ok(s_m.powf(profile.nu()) * (xo[0] * xs[1] - xo[1] * xs[0]))
}

/// A refined zero of `D`.
#[derive(Clone, Debug, PartialEq)]
pub struct DispersionRoot<T> {
    pub lambda: T,
    /// Sign-change bracket from the scan grid.
    pub bracket: (T, T),
    /// Central-difference `dD/dλ` at the root.
    pub derivative: T,
    /// `max(|D(a)|, |D(b)|)/(b − a)` of the bracket.
    pub slope_scale: T,
    /// `|dD/dλ| > SIMPLICITY_TOL · slope_scale`.
    pub simple: bool,
}

/// Scan of `D` over a `λ` grid with refined roots.
#[derive(Clone, Debug, PartialEq)]
pub struct DispersionScan<T> {
    pub z_match: T,
    pub lambda_grid: Vec<T>,
    pub d_values: Vec<T>,
    pub roots: Vec<DispersionRoot<T>>,
    /// Annotations for skipped points (`λ = l·g`).
    pub skipped: Vec<String>,
}

impl<T: Real> DispersionScan<T> {
    pub fn root_values(&self) -> Vec<T> {
        self.roots.iter().map(|r| r.lambda).collect()
    }

    /// CSV `lambda,D`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["lambda", "D"]).map_err(csv_err)?;
        for (l, d) in self.lambda_grid.iter().zip(&self.d_values) {
            wtr.write_record([fmt_num(*l), fmt_num(*d)]).map_err(csv_err)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Scan `D(z₊/2, ·)` on `grid_size` points of `range` (geometric spacing)
/// and refine every sign change.
pub fn scan_and_refine<T: Real>(
    profile: &Arc<EquilibriumProfile<T>>,
    spec: &ModeSpec<T>,
    range: (T, T),
    grid_size: usize,
) -> Result<DispersionScan<T>> {
    scan_with(profile, spec, range, grid_size, profile.z_plus * T::lit(0.5))
}

/// As [`scan_and_refine`] with an explicit matching height.
pub fn scan_with<T: Real>(
    profile: &Arc<EquilibriumProfile<T>>,
    spec: &ModeSpec<T>,
    range: (T, T),
    grid_size: usize,
    z_m: T,
) -> Result<DispersionScan<T>> {
    let (lo, hi) = range;
    if !(lo < hi) || !(lo > T::zero() || hi < T::zero()) {
        return Err(Error::InvalidInput("lambda range must be increasing and exclude 0".into()));
    }
    if grid_size < MIN_GRID {
        return Err(Error::GridTooCoarse { points: grid_size, required: MIN_GRID });
    }
    let lg = spec.l * profile.params.g;
    let delta = T::lit(SKIP_HALF_WIDTH) * lg;
    let ratio = hi / lo;
    let mut grid: Vec<T> = (0..grid_size)
        .map(|i| {
            let f = T::from_count(i) / T::from_count(grid_size - 1);
            lo * ratio.powf(f)
        })
        .collect();
    grid[grid_size - 1] = hi;
    let mut skipped = Vec::new();
    let window = lo <= lg + delta && hi >= lg - delta;
    if window {
        grid.retain(|&x| (x - lg).abs() > delta * T::lit(1.5));
        for x in [lg - delta * T::lit(2.0), lg + delta * T::lit(2.0)] {
            if x > lo && x < hi {
                grid.push(x);
            }
        }
        grid.sort_by(|a, b| a.partial_cmp(b).expect("finite grid"));
        skipped.push(format!(
            "lambda = l*g = {} skipped (window half-width {:e}); no bracket formed across it",
            lg.to_f64_lossy(),
            delta.to_f64_lossy()
        ));
    }
    let d_values: Vec<T> = grid.par_iter().map(|&x| dispersion_value(profile, spec, x, z_m)).collect::<Result<_>>()?;
    let brackets: Vec<usize> = (0..grid.len() - 1)
        .filter(|&i| {
            let crosses_skip = window && grid[i] < lg && grid[i + 1] > lg;
            !crosses_skip && (d_values[i] == T::zero() || (d_values[i] > T::zero()) != (d_values[i + 1] > T::zero()))
        })
        .collect();
    let mut roots: Vec<DispersionRoot<T>> = brackets
        .par_iter()
        .map(|&i| refine(profile, spec, z_m, (grid[i], grid[i + 1]), (d_values[i], d_values[i + 1])))
        .collect::<Result<_>>()?;
    roots.dedup_by(|b, a| (b.lambda - a.lambda).abs() <= T::lit(ROOT_ISOLATION) * a.lambda.abs().max(T::one()));
    Ok(DispersionScan { z_match: z_m, lambda_grid: grid, d_values, roots, skipped })
}

fn refine<T: Real>(
    profile: &Arc<EquilibriumProfile<T>>,
    spec: &ModeSpec<T>,
    z_m: T,
    (a, b): (T, T),
    (fa, fb): (T, T),
) -> Result<DispersionRoot<T>> {
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let d = |x: T| match dispersion_value(profile, spec, x, z_m) {
        Ok(v) => v,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            T::nan()
        }
    };
    let r = brent_with_values(&d, a, b, fa, fb, T::zero(), T::floor_tol(T::lit(ROOT_RTOL)), 200);
    if let Some(e) = failure.borrow_mut().take() {
        return Err(e);
    }
    let root = r?.root;
    let h = root.abs() * T::lit(1e-6);
    let derivative = (d(root + h) - d(root - h)) / (h + h);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let slope_scale = fa.abs().max(fb.abs()) / (b - a);
    Ok(DispersionRoot {
        lambda: root,
        bracket: (a, b),
        derivative,
        slope_scale,
        simple: derivative.abs() > T::lit(SIMPLICITY_TOL) * slope_scale,
    })
}
