//! Liouville normal form `−v″ + q v = Λ v` of a weighted Sturm–Liouville problem.
//!
//! `ζ(z) = ∫₀^z √(κ/a)`, `v = (aκ)^{1/4} w` and, with `A = ln a`, `K = ln κ`
//! (primes are `z`-derivatives),
//!
//! `q = b/κ + (a/κ)[(A′−K′)(A′+K′)/8 + (A″+K″)/4 + (A′+K′)²/16]`.
//!
//! Distances to the singular end are computed as `x = ζ₊ − ζ = ∫₀^s √(κ/a) ds′`
//! in the variable `τ = √s′`, which removes the square-root singularity of the
//! integrand and keeps full relative precision near the vacuum boundary.

use std::cell::Cell;

use super::problem::{LeftBoundary, RightEnd, SLProblem};
use crate::error::{Error, Result};
use crate::quad::GaussLegendre;
use crate::real::Real;
use crate::roots::brent;

/// Potential and coordinate data of the normal form at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormalPoint<T> {
    /// `dζ/dz = √(κ/a)`.
    pub dzeta_dz: T,
    /// `q`.
    pub q: T,
    /// `(aκ)^{1/4}`.
    pub weight_quarter: T,
}

/// Sampling of the normal form on the graded parameter grid
/// `s = L(1 − t)²`, `t = j/N`, used for Rayleigh quotients and eigenfunction output.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalGrid<T> {
    pub t: Vec<T>,
    pub z: Vec<T>,
    pub s: Vec<T>,
    pub zeta: Vec<T>,
    /// `ζ₊ − ζ` (accurate near the singular end).
    pub x: Vec<T>,
    /// `dζ/dt` (zero at a singular endpoint, where it is not needed).
    pub zeta_t: Vec<T>,
    /// `q` (zero at a singular endpoint).
    pub q: Vec<T>,
    /// `(aκ)^{1/4}` (zero at a singular endpoint).
    pub weight_quarter: Vec<T>,
    /// Composite Simpson weights in `t`.
    pub weights: Vec<T>,
    /// True when the last node is a singular endpoint.
    pub singular_end: bool,
}

/// Liouville normal form with singular-endpoint metadata.
#[derive(Clone, Debug)]
pub struct SchrodingerForm<T: Real> {
    pub problem: SLProblem<T>,
    /// `ζ₊ = ζ(L)`.
    pub zeta_plus: T,
    /// `lim q·(ζ₊ − ζ)²` (zero for a regular right end).
    pub cq: T,
    /// Form-bound constants with `q + K₀ ≥ 1 + K₁/(ζ₊ − ζ)²` on the sample grid.
    pub k0: T,
    pub k1: T,
    /// `v_ζ/v` at `ζ = 0` for a Robin left end.
    pub left_tau: Option<T>,
    gl: GaussLegendre<T>,
}

const PANELS: usize = 8;

/// Liouville transform of `p`.
pub fn liouville_transform<T: Real>(p: &SLProblem<T>) -> Result<SchrodingerForm<T>> {
    let cq = match p.right {
        RightEnd::Regular => T::zero(),
        RightEnd::Singular(e) => e.singular_strength()?,
    };
    let mut form = SchrodingerForm {
        problem: p.clone(),
        zeta_plus: T::zero(),
        cq,
        k0: T::one(),
        k1: T::zero(),
        left_tau: None,
        gl: GaussLegendre::new(16),
    };
    let root_l = p.length.sqrt();
    let coarse = form.tail_between(T::zero(), root_l, PANELS)?;
    let fine = form.tail_between(T::zero(), root_l, 2 * PANELS)?;
    if !(fine.is_finite() && fine > T::zero()) || (fine - coarse).abs() > T::lit(1e-8) * fine {
        return Err(Error::DivergentTransform(format!(
            "zeta_plus estimates {} and {} do not agree",
            coarse.to_f64_lossy(),
            fine.to_f64_lossy()
        )));
    }
    form.zeta_plus = fine;
    if let LeftBoundary::Robin { ratio } = p.left {
        let j = p.jets_at_depth(p.length)?;
        let (a1, _) = j.a.log_derivatives();
        let (k1, _) = j.kappa.log_derivatives();
        form.left_tau = Some((j.a.v / j.kappa.v).sqrt() * (ratio + (a1 + k1) * T::lit(0.25)));
    }
    // Form-bound constants from a sample of q.
    let grid = form.grid(400)?;
    let k1 = if grid.singular_end { (T::lit(0.75) + cq) * T::lit(0.5) } else { T::zero() };
    let mut deficit = T::zero();
    for j in 0..grid.t.len() {
        if grid.singular_end && j + 1 == grid.t.len() {
            continue;
        }
        let need = if k1 > T::zero() { k1 / (grid.x[j] * grid.x[j]) } else { T::zero() } - grid.q[j];
        deficit = deficit.max(need);
    }
    form.k0 = T::one() + deficit;
    form.k1 = k1;
    Ok(form)
}

impl<T: Real> SchrodingerForm<T> {
    /// True when the right end is singular.
    pub fn singular(&self) -> bool {
        matches!(self.problem.right, RightEnd::Singular(_))
    }

    /// Exponent `α = (1 + √(1 + 4cq))/2` of the recessive branch `v ~ x^α`.
    pub fn recessive_exponent(&self) -> T {
        (T::one() + (T::one() + T::lit(4.0) * self.cq).sqrt()) * T::lit(0.5)
    }

    /// `√(κ/a)` at depth `s`.
    pub fn dzeta_dz_at_depth(&self, s: T) -> Result<T> {
        let (a, _, k) = self.problem.values_at_depth(s)?;
        Ok((k / a).sqrt())
    }

    /// `∫ √(κ/a) ds` over depths `τ² ∈ [t0², t1²]` (in the variable `τ = √s`).
    fn tail_between(&self, t0: T, t1: T, panels: usize) -> Result<T> {
        let err: Cell<Option<Error>> = Cell::new(None);
        let two = T::lit(2.0);
        let val = self.gl.integrate_composite(t0, t1, panels, |tau| {
            let s = tau * tau;
            match self.dzeta_dz_at_depth(s) {
                Ok(f) => f * two * tau,
                Err(e) => {
                    err.set(Some(e));
                    T::nan()
                }
            }
        });
        if let Some(e) = err.take() {
            return Err(e);
        }
        if !val.is_finite() {
            return Err(Error::DivergentTransform(format!(
                "non-finite sqrt(kappa/a) integral on depths [{}, {}]",
                (t0 * t0).to_f64_lossy(),
                (t1 * t1).to_f64_lossy()
            )));
        }
        Ok(val)
    }

    /// `ζ₊ − ζ` at depth `s`.
    pub fn x_at_depth(&self, s: T) -> Result<T> {
        if s <= T::zero() {
            return Ok(T::zero());
        }
        self.tail_between(T::zero(), s.min(self.problem.length).sqrt(), PANELS)
    }

    /// `ζ(z)`.
    pub fn zeta_of_z(&self, z: T) -> Result<T> {
        let l = self.problem.length;
        if !(z >= T::zero() && z <= l) {
            return Err(Error::OutOfDomain { z: z.to_f64_lossy(), z_plus: l.to_f64_lossy() });
        }
        Ok(self.zeta_plus - self.x_at_depth(l - z)?)
    }

    /// Depth `s` at which `ζ₊ − ζ = x`.
    pub fn depth_of_x(&self, x: T) -> Result<T> {
        let l = self.problem.length;
        if x <= T::zero() {
            return Ok(T::zero());
        }
        if x >= self.zeta_plus {
            return Ok(l);
        }
        let err: Cell<Option<Error>> = Cell::new(None);
        let f = |u: T| match self.x_at_depth(l * u.exp()) {
            Ok(v) => v - x,
            Err(e) => {
                err.set(Some(e));
                T::nan()
            }
        };
        let mut lo = T::lit(-20.0);
        let mut f_lo = f(lo);
        while f_lo > T::zero() && lo > T::lit(-600.0) {
            lo = lo * T::lit(2.0);
            f_lo = f(lo);
        }
        if let Some(e) = err.take() {
            return Err(e);
        }
        let r = brent(f, lo, T::zero(), T::lit(1e-15), T::zero(), 200)?;
        if let Some(e) = err.take() {
            return Err(e);
        }
        Ok(l * r.root.exp())
    }

    /// `z(ζ)`.
    pub fn z_of_zeta(&self, zeta: T) -> Result<T> {
        if !(zeta >= T::zero() && zeta <= self.zeta_plus) {
            return Err(Error::InvalidInput(format!("zeta = {} outside [0, {}]", zeta.to_f64_lossy(), self.zeta_plus.to_f64_lossy())));
        }
        Ok(self.problem.length - self.depth_of_x(self.zeta_plus - zeta)?)
    }

    /// `dζ/dz`, `q` and `(aκ)^{1/4}` at depth `s`.
    pub fn point_at_depth(&self, s: T) -> Result<NormalPoint<T>> {
        let j = self.problem.jets_at_depth(s)?;
        let (a1, a2) = j.a.log_derivatives();
        let (k1, k2) = j.kappa.log_derivatives();
        let sum = a1 + k1;
        let bracket = (a1 - k1) * sum / T::lit(8.0) + (a2 + k2) / T::lit(4.0) + sum * sum / T::lit(16.0);
        Ok(NormalPoint {
            dzeta_dz: (j.kappa.v / j.a.v).sqrt(),
            q: j.b / j.kappa.v + j.a.v / j.kappa.v * bracket,
            weight_quarter: (j.a.v * j.kappa.v).sqrt().sqrt(),
        })
    }

    /// `q` at height `z`.
    pub fn q(&self, z: T) -> Result<T> {
        Ok(self.point_at_depth(self.problem.length - z)?.q)
    }

    /// `(aκ)^{1/4}` at height `z`.
    pub fn weight_quarter(&self, z: T) -> Result<T> {
        Ok(self.point_at_depth(self.problem.length - z)?.weight_quarter)
    }

    /// Sample the form on the graded grid with `n` (rounded up to even) cells.
    pub fn grid(&self, n: usize) -> Result<NormalGrid<T>> {
        let n = (n.max(4) + 1) / 2 * 2;
        let l = self.problem.length;
        let nn = T::from_count(n);
        let root_l = l.sqrt();
        let singular_end = self.singular();
        let two = T::lit(2.0);
        let mut g = NormalGrid {
            t: Vec::with_capacity(n + 1),
            z: Vec::with_capacity(n + 1),
            s: Vec::with_capacity(n + 1),
            zeta: vec![T::zero(); n + 1],
            x: vec![T::zero(); n + 1],
            zeta_t: Vec::with_capacity(n + 1),
            q: Vec::with_capacity(n + 1),
            weight_quarter: Vec::with_capacity(n + 1),
            weights: Vec::with_capacity(n + 1),
            singular_end,
        };
        let h = T::one() / nn;
        for j in 0..=n {
            let t = T::from_count(j) / nn;
            let r = T::one() - t;
            let s = l * r * r;
            g.t.push(t);
            g.s.push(s);
            g.z.push(l - s);
            if singular_end && j == n {
                g.zeta_t.push(T::zero());
                g.q.push(T::zero());
                g.weight_quarter.push(T::zero());
            } else {
                let pt = self.point_at_depth(s)?;
                g.zeta_t.push(pt.dzeta_dz * two * l * r);
                g.q.push(pt.q);
                g.weight_quarter.push(pt.weight_quarter);
            }
            let simpson = if j == 0 || j == n {
                T::one()
            } else if j % 2 == 1 {
                T::lit(4.0)
            } else {
                two
            };
            g.weights.push(simpson * h / T::lit(3.0));
        }
        for j in (0..n).rev() {
            let tau_hi = root_l * (T::one() - g.t[j]);
            let tau_lo = root_l * (T::one() - g.t[j + 1]);
            g.x[j] = g.x[j + 1] + self.tail_between(tau_lo, tau_hi, 1)?;
        }
        // Re-anchor so that x(0) = ζ₊ exactly matches the reference quadrature.
        for j in 0..=n {
            g.zeta[j] = self.zeta_plus - g.x[j];
        }
        g.zeta[0] = T::zero();
        Ok(g)
    }
}
