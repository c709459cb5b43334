//! Shooting eigensolver for the Liouville normal form.
//!
//! The state `(v, v_ζ)` is integrated in `τ = √s` (`s` the depth below the
//! singular end), from the regular end and from the recessive asymptotic
//! branch at the singular end, to the matching point `ζ_m`.  The Prüfer
//! angles `φ = atan2(v, v_ζ)` are unwrapped along the way; the mismatch
//! `Δ(Λ) = φ_L(ζ_m) − φ_R(ζ_m)` increases monotonically from `−π` and the
//! `n`-th eigenvalue solves `Δ(Λ) = (n − 1)π`.

use std::cell::Cell;

use super::fd::{orientation, sign_changes};
use super::liouville::{NormalGrid, SchrodingerForm};
use super::problem::LeftBoundary;
use super::{Eigenpair, SolveMethod};
use crate::error::{Error, Result};
use crate::ode::{Integrator, OdeOptions};
use crate::real::Real;
use crate::roots::brent;

/// Controls for [`shoot_with`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShootOptions<T> {
    /// Relative eigenvalue tolerance requested by the caller.
    pub tol: T,
    /// Relative tolerance of the Runge–Kutta integrator.
    pub ode_rtol: T,
    /// Start offset `(ζ₊ − ζ)/ζ₊` of the asymptotic initialization.
    pub offset: T,
    /// Matching point as a fraction of `ζ₊`.
    pub match_fraction: T,
    /// Cells of the output grid (see [`SchrodingerForm::grid`]).
    pub samples: usize,
}

impl<T: Real> Default for ShootOptions<T> {
    fn default() -> Self {
        Self { tol: T::lit(1e-8), ode_rtol: T::lit(1e-10), offset: T::lit(1e-6), match_fraction: T::lit(0.5), samples: 400 }
    }
}

/// One integration sweep: final Prüfer angle, final normalized state and
/// its accumulated log-scale, plus recorded states (state, log-scale).
struct Sweep<T> {
    angle: T,
    y: [T; 2],
    log_scale: T,
    recorded: Vec<([T; 2], T)>,
}

struct Shooter<'a, T: Real> {
    form: &'a SchrodingerForm<T>,
    tau_m: T,
    tau_left: T,
    tau_right: T,
    left_init: [T; 2],
    right_init: [T; 2],
    ode: OdeOptions<T>,
}

fn wrap<T: Real>(d: T) -> T {
    let pi = T::PI();
    let two_pi = pi + pi;
    let mut d = d;
    while d > pi {
        d = d - two_pi;
    }
    while d <= -pi {
        d = d + two_pi;
    }
    d
}

impl<'a, T: Real> Shooter<'a, T> {
    fn new(form: &'a SchrodingerForm<T>, opts: &ShootOptions<T>) -> Result<Self> {
        let l = form.problem.length;
        let s_m = form.depth_of_x((T::one() - opts.match_fraction) * form.zeta_plus)?;
        let left_init = match (form.problem.left, form.left_tau) {
            (LeftBoundary::Dirichlet, _) => [T::zero(), T::one()],
            (LeftBoundary::Robin { .. }, Some(tau)) => [T::one(), tau],
            (LeftBoundary::Robin { .. }, None) => {
                return Err(Error::InvalidInput("Robin form without boundary slope".into()));
            }
        };
        let (tau_right, right_init) = if form.singular() {
            let x0 = opts.offset * form.zeta_plus;
            let s0 = form.depth_of_x(x0)?;
            let x0 = form.x_at_depth(s0)?;
            let pt = form.point_at_depth(s0)?;
            let lead = pt.q * x0 * x0;
            if (lead - form.cq).abs() > T::lit(1e-2) * form.cq.max(T::one()) {
                return Err(Error::InvalidInput(format!(
                    "declared singular exponents give cq = {} but q·x² = {} near the end",
                    form.cq.to_f64_lossy(),
                    lead.to_f64_lossy()
                )));
            }
            let alpha = form.recessive_exponent();
            let c1 = (lead - form.cq) / x0 / (T::lit(2.0) * alpha);
            (s0.sqrt(), [T::one() + c1 * x0, -(alpha + c1 * (alpha + T::one()) * x0) / x0])
        } else {
            (T::zero(), [T::zero(), -T::one()])
        };
        Ok(Self {
            form,
            tau_m: s_m.sqrt(),
            tau_left: l.sqrt(),
            tau_right,
            left_init,
            right_init,
            ode: OdeOptions::with_rtol(opts.ode_rtol),
        })
    }

    /// Integrate from `tau0` to `tau1`, renormalizing between chunks; records the
    /// state at each of `points` (ordered in the integration direction).
    fn sweep(&self, lambda: T, tau0: T, tau1: T, y0: [T; 2], points: &[T]) -> Result<Sweep<T>> {
        let err: Cell<Option<Error>> = Cell::new(None);
        let two = T::lit(2.0);
        let mut rhs = |tau: T, y: &[T; 2]| -> [T; 2] {
            match self.form.point_at_depth(tau * tau) {
                Ok(pt) => {
                    let f = two * tau * pt.dzeta_dz;
                    [-f * y[1], -f * (pt.q - lambda) * y[0]]
                }
                Err(e) => {
                    err.set(Some(e));
                    [T::nan(), T::nan()]
                }
            }
        };
        let mut stops: Vec<(T, bool)> = points.iter().map(|&p| (p, true)).collect();
        if points.is_empty() {
            let chunks = 16;
            for k in 1..=chunks {
                let frac = T::from_count(k) / T::from_count(chunks);
                stops.push((tau0 + (tau1 - tau0) * frac, false));
            }
        } else {
            stops.push((tau1, false));
        }
        let mut it = Integrator::new(tau0, y0, self.ode);
        let mut angle = y0[0].atan2(y0[1]);
        let mut raw = angle;
        let mut log_scale = T::zero();
        let mut recorded = Vec::with_capacity(points.len());
        for (stop, record) in stops {
            if stop != it.t {
                let mut observe = |_t: T, y: &[T; 2]| {
                    let r = y[0].atan2(y[1]);
                    angle = angle + wrap(r - raw);
                    raw = r;
                };
                let res = it.advance(stop, &mut rhs, &mut observe);
                if let Some(e) = err.take() {
                    return Err(e);
                }
                res?;
            }
            let nrm = (it.y[0] * it.y[0] + it.y[1] * it.y[1]).sqrt();
            if nrm > T::zero() && nrm.is_finite() {
                it.y = [it.y[0] / nrm, it.y[1] / nrm];
                log_scale = log_scale + nrm.ln();
            }
            if record {
                recorded.push((it.y, log_scale));
            }
        }
        Ok(Sweep { angle, y: it.y, log_scale, recorded })
    }

    fn mismatch(&self, lambda: T) -> Result<T> {
        let left = self.sweep(lambda, self.tau_left, self.tau_m, self.left_init, &[])?;
        let right = self.sweep(lambda, self.tau_right, self.tau_m, self.right_init, &[])?;
        Ok(left.angle - right.angle)
    }
}

/// Shooting eigensolver with default options and eigenvalue tolerance `tol`.
pub fn shoot_eigensolve<T: Real>(form: &SchrodingerForm<T>, n_max: usize, tol: T) -> Result<Vec<Eigenpair<T>>> {
    shoot_with(form, n_max, ShootOptions { tol, ..ShootOptions::default() })
}

/// Shooting eigensolver.
pub fn shoot_with<T: Real>(form: &SchrodingerForm<T>, n_max: usize, opts: ShootOptions<T>) -> Result<Vec<Eigenpair<T>>> {
    if form.singular() && !(form.cq > T::lit(0.75)) {
        return Err(Error::LimitCircle { cq: form.cq.to_f64_lossy() });
    }
    if n_max == 0 {
        return Ok(Vec::new());
    }
    if !(opts.match_fraction > T::zero() && opts.match_fraction < T::one()) {
        return Err(Error::InvalidInput("match_fraction must lie in (0, 1)".into()));
    }
    let sh = Shooter::new(form, &opts)?;
    let pi = T::PI();
    let mut evals: Vec<(T, T)> = Vec::new();
    let eval = |lambda: T, evals: &mut Vec<(T, T)>| -> Result<T> {
        let d = sh.mismatch(lambda)?;
        evals.push((lambda, d));
        Ok(d)
    };
    // Lower and upper brackets.
    let mut lo = -(form.k0.max(T::one()));
    let mut tries = 0;
    while eval(lo, &mut evals)? >= T::zero() {
        lo = lo * T::lit(4.0);
        tries += 1;
        if tries > 40 {
            return Err(Error::BracketFailure { index: 1, detail: "no lower bound for the spectrum found".into() });
        }
    }
    let top = T::from_count(n_max - 1) * pi;
    let mut hi = T::one().max(-lo);
    tries = 0;
    while eval(hi, &mut evals)? <= top {
        hi = hi * T::lit(2.0);
        tries += 1;
        if tries > 80 {
            return Err(Error::BracketFailure { index: n_max, detail: "mismatch angle does not reach the requested mode".into() });
        }
    }
    let rtol = T::floor_tol(T::lit(1e-12));
    let mut values = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let target = T::from_count(n - 1) * pi;
        let (mut a, mut fa, mut b, mut fb) = (lo, T::neg_infinity(), hi, T::infinity());
        for &(x, d) in &evals {
            if d < target && x >= a {
                a = x;
                fa = d - target;
            }
            if d > target && x <= b {
                b = x;
                fb = d - target;
            }
        }
        if !(fa.is_finite() && fb.is_finite()) || !(a < b) {
            return Err(Error::BracketFailure { index: n, detail: "mode not bracketed by the scanned range".into() });
        }
        let err: Cell<Option<Error>> = Cell::new(None);
        let mut local = Vec::new();
        let xtol = T::lit(1e-14) * (a.abs() + b.abs());
        let r = brent(
            |x| match eval(x, &mut local) {
                Ok(d) => d - target,
                Err(e) => {
                    err.set(Some(e));
                    T::nan()
                }
            },
            a,
            b,
            xtol,
            rtol,
            200,
        );
        if let Some(e) = err.take() {
            return Err(e);
        }
        let r = r.map_err(|e| Error::BracketFailure { index: n, detail: e.to_string() })?;
        evals.extend(local);
        values.push(r.root);
    }
    let grid = form.grid(opts.samples)?;
    values.iter().enumerate().map(|(k, &lam)| eigenfunction(&sh, &grid, k + 1, lam)).collect()
}

fn eigenfunction<T: Real>(sh: &Shooter<'_, T>, grid: &NormalGrid<T>, n: usize, lambda: T) -> Result<Eigenpair<T>> {
    let form = sh.form;
    let nodes = grid.t.len();
    let root_l = form.problem.length.sqrt();
    let taus: Vec<T> = grid.t.iter().map(|&t| root_l * (T::one() - t)).collect();
    // Left part: nodes with τ > τ_m (integration direction: decreasing τ).
    let split = taus.iter().position(|&tau| tau <= sh.tau_m).unwrap_or(nodes);
    let left_pts: Vec<T> = taus[..split].to_vec();
    // Right part: nodes with τ_right < τ ≤ τ_m in increasing τ.
    let right_nodes: Vec<usize> = (split..nodes).rev().filter(|&j| taus[j] > sh.tau_right).collect();
    let right_pts: Vec<T> = right_nodes.iter().map(|&j| taus[j]).collect();
    let left = sh.sweep(lambda, sh.tau_left, sh.tau_m, sh.left_init, &left_pts)?;
    let right = sh.sweep(lambda, sh.tau_right, sh.tau_m, sh.right_init, &right_pts)?;
    let residual = (left.angle - right.angle - T::from_count(n - 1) * T::PI()).abs();
    let dot = left.y[0] * right.y[0] + left.y[1] * right.y[1];
    let c = dot / (right.y[0] * right.y[0] + right.y[1] * right.y[1]);
    let mut v = vec![T::zero(); nodes];
    for (j, (y, ls)) in left.recorded.iter().enumerate() {
        v[j] = y[0] * (*ls - left.log_scale).exp();
    }
    for (k, &j) in right_nodes.iter().enumerate() {
        let (y, ls) = right.recorded[k];
        v[j] = c * y[0] * (ls - right.log_scale).exp();
    }
    // Endpoint samples of w: regular end w = 0, singular end from the asymptotic start.
    let mut w: Vec<T> = v.iter().zip(&grid.weight_quarter).map(|(v, q)| if *q > T::zero() { *v / *q } else { T::zero() }).collect();
    if form.singular() {
        let s0 = sh.tau_right * sh.tau_right;
        let wq = form.point_at_depth(s0)?.weight_quarter;
        let v0 = c * sh.right_init[0] * (-right.log_scale).exp();
        // The right sweep starts from `right_init` with log-scale zero.
        w[nodes - 1] = v0 / wq;
        v[nodes - 1] = T::zero();
    }
    let norm = grid
        .weights
        .iter()
        .zip(&grid.zeta_t)
        .zip(&v)
        .fold(T::zero(), |acc, ((wt, zt), vv)| acc + *wt * *zt * *vv * *vv)
        .sqrt();
    let sign = orientation(&v[..nodes - 1]);
    for (vv, ww) in v.iter_mut().zip(w.iter_mut()) {
        *vv = *vv * sign / norm;
        *ww = *ww * sign / norm;
    }
    let zeros = sign_changes(&v[1..nodes - 1]);
    if zeros != n - 1 {
        return Err(Error::BracketFailure {
            index: n,
            detail: format!("eigenfunction has {zeros} sign changes, expected {}", n - 1),
        });
    }
    Ok(Eigenpair {
        index: n,
        value: lambda,
        z: grid.z.clone(),
        w,
        v,
        residual,
        method: SolveMethod::Shooting,
        zeros,
        error_estimate: lambda.abs() * T::lit(1e-9),
        order: None,
    })
}
