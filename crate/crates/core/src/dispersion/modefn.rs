//! Eigenfunction reconstruction, the operator `L_l` on samples, the
//! isentropic kernel family and the resolvent.
//!
//! The operator acts on `(u, w)` as
//!
//! ```text
//! δρ = −lρu − (ρw)′,   δP = −c²ρ(lu + w′) + gρw,
//! L^u = −(l/ρ) δP,     L^w = (1/ρ)(δP)′ + (g/ρ) δρ.
//! ```
//!
//! With `d = lu + w′` and `q = δP/ρ = −c²d + gw` this is
//! `L^u = −l q`, `L^w = q′ + (c²/H[ρ] − g) d`, which has no division by the
//! vanishing density; [`apply_operator`] uses that form.  Norms are
//! `‖(u, w)‖² = ∫ ρ (u² + w²) dz`.

use std::io::Write;
use std::sync::Arc;

use super::{
    assemble_system, background, build_series, dispersion_value, phi_o1_scaled_at, phi_s1_scaled_at, Background, FirstOrderSystem,
    DEFAULT_ORDER,
};
use crate::equilibrium::EquilibriumProfile;
use crate::error::{Error, Result};
use crate::fixedpoint::ModeSpec;
use crate::grid::{DiffOperator, Grid};
use crate::real::Real;
use crate::slcore::{csv_err, fmt_num};

/// Maximal sine of the angle between the two branches at the matching point.
pub const GLUE_TOL: f64 = 1e-6;
/// Default number of graded cells for sampled mode functions.
pub const DEFAULT_NODES: usize = 2000;
/// Stencil width of the finite differences in [`apply_operator`].
const STENCIL: usize = 7;
/// A `λ` closer than this (relative, Newton distance) to a root is rejected by the resolvent.
pub const NEAR_EIGENVALUE: f64 = 1e-8;

/// Samples of a solution of the first-order system on a graded grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeFunction<T> {
    pub lambda: T,
    pub z: Vec<T>,
    /// Depths `z₊ − z` (exact, not obtained by subtraction).
    pub s: Vec<T>,
    pub w: Vec<T>,
    pub eta: Vec<T>,
    pub u: Vec<T>,
    /// Boundary trace `w(z₊)`.
    pub alpha: T,
    /// `u(z₊)`.
    pub u_trace: T,
    /// Sine of the angle between the glued branches (0 when not glued).
    pub glue_sine: T,
    /// `‖L(u, w) − λ(u, w) − f‖ / ‖·‖`; see the producing function.
    pub residual: T,
}

/// Write `z,u,w,eta` with 17 significant digits.
pub fn write_mode_function_csv<T: Real, W: Write>(out: W, m: &ModeFunction<T>) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["z", "u", "w", "eta"]).map_err(csv_err)?;
    for i in 0..m.z.len() {
        wtr.write_record([fmt_num(m.z[i]), fmt_num(m.u[i]), fmt_num(m.w[i]), fmt_num(m.eta[i])]).map_err(csv_err)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Graded grid `z_j = z₊(1 − r_j²)`, `r_j = 1 − j/N`, with exact depths `z₊ r_j²`.
fn graded<T: Real>(zp: T, nodes: usize) -> (Grid<T>, Vec<T>) {
    let grid = Grid::graded(zp, nodes);
    let n = grid.len() - 1;
    let depths = (0..=n)
        .map(|j| {
            let r = T::one() - T::from_count(j) / T::from_count(n);
            zp * r * r
        })
        .collect();
    (grid, depths)
}

fn backgrounds<T: Real>(profile: &EquilibriumProfile<T>, depths: &[T]) -> Result<Vec<Background<T>>> {
    depths.iter().map(|&s| background(profile, s)).collect()
}

/// `∫ ρ a b dz` (trapezoid on the given nodes).
pub fn weighted_inner<T: Real>(z: &[T], rho: &[T], a: &[T], b: &[T]) -> T {
    let mut acc = T::zero();
    for i in 1..z.len() {
        let f0 = rho[i - 1] * a[i - 1] * b[i - 1];
        let f1 = rho[i] * a[i] * b[i];
        acc = acc + (z[i] - z[i - 1]) * (f0 + f1) * T::lit(0.5);
    }
    acc
}

fn pair_norm<T: Real>(z: &[T], rho: &[T], u: &[T], w: &[T]) -> T {
    (weighted_inner(z, rho, u, u) + weighted_inner(z, rho, w, w)).sqrt()
}

/// Least-squares slope of `ln|f|` against `ln s` (points with `s > 0`, `f ≠ 0`).
pub fn fit_exponent<T: Real>(s: &[T], f: &[T]) -> T {
    let pts: Vec<(T, T)> = s.iter().zip(f).filter(|(s, f)| **s > T::zero() && **f != T::zero()).map(|(s, f)| (s.ln(), f.abs().ln())).collect();
    let n = T::from_count(pts.len());
    let mx = pts.iter().map(|p| p.0).sum::<T>() / n;
    let my = pts.iter().map(|p| p.1).sum::<T>() / n;
    let sxy = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<T>();
    let sxx = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum::<T>();
    sxy / sxx
}

/// `(L^u, L^w)` of samples `(u, w)` at heights `z` (increasing, may end at `z₊`).
pub fn apply_operator<T: Real>(
    profile: &EquilibriumProfile<T>,
    spec: &ModeSpec<T>,
    z: &[T],
    u: &[T],
    w: &[T],
) -> Result<(Vec<T>, Vec<T>)> {
    let depths: Vec<T> = z.iter().map(|&z| profile.z_plus - z).collect();
    apply_operator_depths(profile, spec, z, &depths, u, w)
}

fn apply_operator_depths<T: Real>(
    profile: &EquilibriumProfile<T>,
    spec: &ModeSpec<T>,
    z: &[T],
    depths: &[T],
    u: &[T],
    w: &[T],
) -> Result<(Vec<T>, Vec<T>)> {
    if z.len() < STENCIL {
        return Err(Error::GridTooCoarse { points: z.len(), required: STENCIL });
    }
    if u.len() != z.len() || w.len() != z.len() {
        return Err(Error::InvalidInput("sample arrays must match the grid".into()));
    }
    let bg = backgrounds(profile, depths)?;
    let (l, g) = (spec.l, profile.params.g);
    let dop = DiffOperator::new(z, STENCIL)?;
    let wz = dop.apply(w);
    let d: Vec<T> = (0..z.len()).map(|i| l * u[i] + wz[i]).collect();
    let q: Vec<T> = (0..z.len()).map(|i| -bg[i].c2 * d[i] + g * w[i]).collect();
    let qz = dop.apply(&q);
    let lu = q.iter().map(|&q| -l * q).collect();
    let lw = (0..z.len()).map(|i| qz[i] + (bg[i].c2_over_h - g) * d[i]).collect();
    Ok((lu, lw))
}

/// Relative residual `‖L(u,w) − λ(u,w) − f‖ / norm`.
#[allow(clippy::too_many_arguments)]
fn operator_residual<T: Real>(
    profile: &EquilibriumProfile<T>,
    spec: &ModeSpec<T>,
    z: &[T],
    depths: &[T],
    rho: &[T],
    lambda: T,
    (u, w): (&[T], &[T]),
    forcing: Option<(&[T], &[T])>,
    norm: T,
) -> Result<T> {
    let (lu, lw) = apply_operator_depths(profile, spec, z, depths, u, w)?;
    let n = z.len();
    let mut ru: Vec<T> = (0..n).map(|i| lu[i] - lambda * u[i]).collect();
    let mut rw: Vec<T> = (0..n).map(|i| lw[i] - lambda * w[i]).collect();
    if let Some((fu, fw)) = forcing {
        for i in 0..n {
            ru[i] = ru[i] - fu[i];
            rw[i] = rw[i] - fw[i];
        }
    }
    if norm == T::zero() {
        return Ok(pair_norm(z, rho, &ru, &rw));
    }
    Ok(pair_norm(z, rho, &ru, &rw) / norm)
}

/// Eigenfunction at a refined root on the default grid, glued at `z₊/2`.
pub fn reconstruct_eigenfunction<T: Real>(
    profile: &Arc<EquilibriumProfile<T>>,
    spec: &ModeSpec<T>,
    lambda_root: T,
) -> Result<ModeFunction<T>> {
    reconstruct_with(profile, spec, lambda_root, DEFAULT_NODES, profile.z_plus * T::lit(0.5))
}

/// Eigenfunction on a graded grid with `nodes` cells, glued at the node nearest `z_m`.
///
/// `φ_O1` (from the ground) is scaled onto `φ_S1` (from the vacuum) at the
/// matching node, so that `α = w(z₊) = 1`.  `residual` is
/// `‖L(u,w) − λ(u,w)‖ / ‖(u,w)‖`.
pub fn reconstruct_with<T: Real>(
    profile: &Arc<EquilibriumProfile<T>>,
    spec: &ModeSpec<T>,
    lambda: T,
    nodes: usize,
    z_m: T,
) -> Result<ModeFunction<T>> {
    let sys = assemble_system(profile, spec, lambda)?;
    let zp = profile.z_plus;
    if nodes < 16 {
        return Err(Error::GridTooCoarse { points: nodes, required: 16 });
    }
    let (grid, depths) = graded(zp, nodes);
    let n = depths.len() - 1;
    let m = (grid.z.iter().position(|&z| z >= z_m).unwrap_or(n)).clamp(1, n - 1);
    let fs = build_series(&sys, DEFAULT_ORDER);
    let xo = phi_o1_scaled_at(&sys, &depths[..=m])?;
    let asc: Vec<T> = depths[m..].iter().rev().copied().collect();
    let mut xs = phi_s1_scaled_at(&sys, &fs, &asc)?;
    xs.reverse();
    let (a, b) = (xo[m], xs[0]);
    let na = (a[0] * a[0] + a[1] * a[1]).sqrt();
    let nb = (b[0] * b[0] + b[1] * b[1]).sqrt();
    let sine = (a[0] * b[1] - a[1] * b[0]).abs() / (na * nb);
    if !(sine <= T::lit(GLUE_TOL)) {
        return Err(Error::GlueMismatch { sine: sine.to_f64_lossy() });
    }
    let c = (a[0] * b[0] + a[1] * b[1]) / (na * na);
    let x: Vec<[T; 2]> = (0..=n).map(|j| if j < m { [c * xo[j][0], c * xo[j][1]] } else { xs[j - m] }).collect();
    let bg = backgrounds(profile, &depths)?;
    let nu = profile.nu();
    let (l, g) = (spec.l, profile.params.g);
    let w: Vec<T> = x.iter().map(|v| v[0]).collect();
    let eta: Vec<T> = x.iter().zip(&depths).map(|(v, &s)| v[1] * s.powf(nu)).collect();
    let u: Vec<T> = (0..=n).map(|j| -(l / lambda) * (x[j][1] / bg[j].rho_hat + g * w[j])).collect();
    let rho: Vec<T> = bg.iter().map(|b| b.rho).collect();
    let norm = pair_norm(&grid.z, &rho, &u, &w);
    let residual = operator_residual(profile, spec, &grid.z, &depths, &rho, lambda, (&u, &w), None, norm)?;
    Ok(ModeFunction {
        lambda,
        alpha: w[n],
        u_trace: u[n],
        z: grid.z,
        s: depths,
        w,
        eta,
        u,
        glue_sine: sine,
        residual,
    })
}

/// Kernel element `u = −(1/(lρ)) d(ρΥ)/dz`, `w = Υ` of an isentropic profile.
/// `upsilon(z)` returns `(Υ, Υ′)` and should vanish near both ends.
pub fn kernel_family_isentropic<T: Real, F: Fn(T) -> (T, T)>(
    profile: &EquilibriumProfile<T>,
    spec: &ModeSpec<T>,
    z: &[T],
    upsilon: F,
) -> Result<(Vec<T>, Vec<T>)> {
    if !profile.is_isentropic() {
        let zp = profile.z_plus;
        let mut max_a = T::zero();
        for i in 0..64 {
            let f = profile.eval(zp * T::from_count(i) / T::lit(64.0))?;
            max_a = max_a.max(f.a_schwarz.abs());
        }
        return Err(Error::NotIsentropic { max_abs_a: max_a.to_f64_lossy() });
    }
    let mut u = Vec::with_capacity(z.len());
    let mut w = Vec::with_capacity(z.len());
    for &zi in z {
        let (y, dy) = upsilon(zi);
        let tail = if y == T::zero() { T::zero() } else { y / profile.eval(zi)?.h_rho };
        u.push(-(dy - tail) / spec.l);
        w.push(y);
    }
    Ok((u, w))
}

/// A forcing `(f^u, f^w)` sampled on the graded grid `Grid::graded(z₊, nodes)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Forcing<T> {
    pub z: Vec<T>,
    pub fu: Vec<T>,
    pub fw: Vec<T>,
}

impl<T: Real> Forcing<T> {
    /// Sample `f(z) = (f^u, f^w)` on the graded grid with `nodes` cells (rounded up to even).
    pub fn sample<F: Fn(T) -> (T, T)>(profile: &EquilibriumProfile<T>, nodes: usize, f: F) -> Self {
        let z = Grid::graded(profile.z_plus, nodes).z;
        let (fu, fw) = z.iter().map(|&z| f(z)).unzip();
        Self { z, fu, fw }
    }
}

/// Solution of `(L − λ)(u, w) = f` by variation of parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct ResolventProblem<T> {
    pub lambda: T,
    pub forcing: Forcing<T>,
    /// `h₁ = (l/λ) f^u`.
    pub h1: Vec<T>,
    /// `h₂ = ρ (f^w − (lg/λ) f^u)`.
    pub h2: Vec<T>,
    /// Coefficient of `φ_O1`: `H₁(z) = −∫_z^{z₊} (η_S h₁ − w_S h₂)/W`.
    pub big_h1: Vec<T>,
    /// Coefficient of `φ_S1`: `H₂(z) = ∫_0^z (w_O h₂ − η_O h₁)/W`.
    pub big_h2: Vec<T>,
    /// Wronskian `W = w_O η_S − η_O w_S`.
    pub wronskian: T,
    /// `1 / sin∠(φ_O1, φ_S1)` at `z₊/2`.
    pub condition: T,
    /// Solution; its `residual` is `‖(L−λ)(u,w) − f‖ / ‖f‖`.
    pub solution: ModeFunction<T>,
    /// `‖(u, w)‖ / ‖f‖`.
    pub norm_ratio: T,
}

/// Interval integrals `∫_{t_j}^{t_{j+1}} g dt` of uniform samples (four-point rule).
fn interval_integrals<T: Real>(g: &[T], h: T) -> Vec<T> {
    let n = g.len() - 1;
    let c = |a: f64| T::lit(a / 24.0);
    (0..n)
        .map(|j| {
            let v = if n < 3 {
                (g[j] + g[j + 1]) * T::lit(0.5)
            } else if j == 0 {
                c(9.0) * g[0] + c(19.0) * g[1] - c(5.0) * g[2] + c(1.0) * g[3]
            } else if j == n - 1 {
                c(1.0) * g[n - 3] - c(5.0) * g[n - 2] + c(19.0) * g[n - 1] + c(9.0) * g[n]
            } else {
                -c(1.0) * g[j - 1] + c(13.0) * g[j] + c(13.0) * g[j + 1] - c(1.0) * g[j + 2]
            };
            v * h
        })
        .collect()
}

/// Solve `(L − λ)(u, w) = f` for `λ` off the spectrum.
pub fn resolvent_solve<T: Real>(
    profile: &Arc<EquilibriumProfile<T>>,
    spec: &ModeSpec<T>,
    lambda: T,
    forcing: &Forcing<T>,
) -> Result<ResolventProblem<T>> {
    let sys: FirstOrderSystem<T> = assemble_system(profile, spec, lambda)?;
    let zp = profile.z_plus;
    let cells = forcing.z.len().saturating_sub(1);
    if cells < 16 {
        return Err(Error::GridTooCoarse { points: forcing.z.len(), required: 17 });
    }
    let (grid, depths) = graded(zp, cells);
    if grid.len() != forcing.z.len()
        || grid.z.iter().zip(&forcing.z).any(|(a, b)| (*a - *b).abs() > T::lit(1e-12) * zp)
        || forcing.fu.len() != grid.len()
        || forcing.fw.len() != grid.len()
    {
        return Err(Error::InvalidInput("forcing must be sampled on Grid::graded(z_plus, nodes)".into()));
    }
    let n = cells;
    let m = n / 2;
    let fs = build_series(&sys, DEFAULT_ORDER);
    let xo = phi_o1_scaled_at(&sys, &depths[..n])?;
    let asc: Vec<T> = depths.iter().rev().copied().collect();
    let mut xs = phi_s1_scaled_at(&sys, &fs, &asc)?;
    xs.reverse();
    let nu = profile.nu();
    let sm = depths[m];
    let (a, b) = (xo[m], xs[m]);
    let wronskian = sm.powf(nu) * (a[0] * b[1] - a[1] * b[0]);
    let sine = (a[0] * b[1] - a[1] * b[0]).abs() / ((a[0] * a[0] + a[1] * a[1]).sqrt() * (b[0] * b[0] + b[1] * b[1]).sqrt());
    let condition = T::one() / sine;
    // Newton distance to the nearest root of D.
    let hl = lambda.abs() * T::lit(1e-6);
    let z_m = grid.z[m];
    let dp = dispersion_value(profile, spec, lambda + hl, z_m)?;
    let dm = dispersion_value(profile, spec, lambda - hl, z_m)?;
    let distance = (wronskian / ((dp - dm) / (hl + hl))).abs();
    if !(distance > T::lit(NEAR_EIGENVALUE) * lambda.abs().max(T::one())) {
        return Err(Error::NearEigenvalue {
            lambda: lambda.to_f64_lossy(),
            distance: distance.to_f64_lossy(),
            condition: condition.to_f64_lossy(),
        });
    }
    let bg = backgrounds(profile, &depths)?;
    let (l, g) = (spec.l, profile.params.g);
    let h1: Vec<T> = forcing.fu.iter().map(|&f| l / lambda * f).collect();
    let h2: Vec<T> = (0..=n).map(|j| bg[j].rho * (forcing.fw[j] - l * g / lambda * forcing.fu[j])).collect();
    // Integrands in the grid parameter t (dz/dt = 2 z₊ (1 − t) vanishes at the vacuum node).
    let ht = T::one() / T::from_count(n);
    let dzdt = |j: usize| T::lit(2.0) * zp * (T::one() - T::from_count(j) * ht);
    let mut g1 = vec![T::zero(); n + 1];
    let mut g2 = vec![T::zero(); n + 1];
    for j in 0..n {
        let sp = depths[j].powf(nu);
        let (w_s, eta_s) = (xs[j][0], xs[j][1] * sp);
        let (w_o, eta_o) = (xo[j][0], xo[j][1] * sp);
        g1[j] = (eta_s * h1[j] - w_s * h2[j]) / wronskian * dzdt(j);
        g2[j] = (w_o * h2[j] - eta_o * h1[j]) / wronskian * dzdt(j);
    }
    let i1 = interval_integrals(&g1, ht);
    let i2 = interval_integrals(&g2, ht);
    let mut big_h1 = vec![T::zero(); n + 1];
    let mut big_h2 = vec![T::zero(); n + 1];
    for j in (0..n).rev() {
        big_h1[j] = big_h1[j + 1] - i1[j];
    }
    for j in 0..n {
        big_h2[j + 1] = big_h2[j] + i2[j];
    }
    let mut w = vec![T::zero(); n + 1];
    let mut eta = vec![T::zero(); n + 1];
    let mut u = vec![T::zero(); n + 1];
    for j in 0..=n {
        // At the vacuum node H₁ φ_O1 → 0.
        let (ow, ot) = if j < n { (big_h1[j] * xo[j][0], big_h1[j] * xo[j][1]) } else { (T::zero(), T::zero()) };
        let x0 = ow + big_h2[j] * xs[j][0];
        let x1 = ot + big_h2[j] * xs[j][1];
        w[j] = x0;
        eta[j] = x1 * depths[j].powf(nu);
        u[j] = -(forcing.fu[j] + l * x1 / bg[j].rho_hat + l * g * x0) / lambda;
    }
    let rho: Vec<T> = bg.iter().map(|b| b.rho).collect();
    let f_norm = pair_norm(&grid.z, &rho, &forcing.fu, &forcing.fw);
    let sol_norm = pair_norm(&grid.z, &rho, &u, &w);
    let residual =
        operator_residual(profile, spec, &grid.z, &depths, &rho, lambda, (&u, &w), Some((&forcing.fu, &forcing.fw)), f_norm)?;
    let norm_ratio = if f_norm > T::zero() { sol_norm / f_norm } else { T::zero() };
    let solution = ModeFunction {
        lambda,
        alpha: w[n],
        u_trace: u[n],
        z: grid.z,
        s: depths,
        w,
        eta,
        u,
        glue_sine: T::zero(),
        residual,
    };
    Ok(ResolventProblem { lambda, forcing: forcing.clone(), h1, h2, big_h1, big_h2, wronskian, condition, solution, norm_ratio })
}
