//! Synthesis of displacement fields from computed modes and the motion of
//! the vacuum boundary.
//!
//! A mode with wavenumber `l` in direction `x` contributes, with `ω = √λ`,
//!
//! * standing: `ξ¹ = a u(z) sin(ωt) sin(lx)`, `ξ³ = a w(z) sin(ωt) cos(lx)`;
//! * progressive: `ξ¹ = a u(z) sin(lx − ωt)`, `ξ³ = a w(z) cos(lx − ωt)`
//!
//! (`ξ²` and `y` for modes in direction `y`).  Mode functions are normalized
//! by their boundary trace, so `w(z₊) = 1`.  Both kinds are combinations of
//! two horizontal quadratures, `(u sin lx, w cos lx)` and `(−u cos lx, w sin lx)`,
//! on each of which the operator acts as `L_l` on `(u, w)`.

use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dispersion::{apply_operator, weighted_inner, ModeFunction};
use crate::equilibrium::EquilibriumProfile;
use crate::error::{Error, Result};
use crate::grid::interp_cubic;
use crate::real::Real;
use crate::slcore::{csv_err, fmt_num};
use crate::vertical::ModeFunction as VerticalModeFunction;

/// Default boundary amplitude.
pub const DEFAULT_EPSILON: f64 = 1e-2;
/// Invertibility margin: `ε Σ a l |u(z₊)| < 1/2`.
pub const INVERTIBILITY_MARGIN: f64 = 0.5;
/// Step of the centred time difference in [`wave_residual`].
pub const TIME_STEP: f64 = 1e-4;
/// Tolerance of the fixed-point solve for the Lagrangian label.
pub const LABEL_TOL: f64 = 1e-12;

/// Horizontal direction of a mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    X,
    Y,
}

impl std::str::FromStr for Direction {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "x" | "X" => Ok(Direction::X),
            "y" | "Y" => Ok(Direction::Y),
            other => Err(Error::InvalidInput(format!("direction must be x or y, got {other:?}"))),
        }
    }
}

/// Standing or progressive superposition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    Standing,
    Progressive,
}

impl std::str::FromStr for FieldKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "standing" => Ok(FieldKind::Standing),
            "progressive" => Ok(FieldKind::Progressive),
            other => Err(Error::InvalidInput(format!("kind must be standing or progressive, got {other:?}"))),
        }
    }
}

/// One term of a field: a certified eigenpair with direction and amplitude.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldMode<T> {
    pub direction: Direction,
    pub l: T,
    pub lambda: T,
    pub amplitude: T,
    pub z: Vec<T>,
    /// `u / w(z₊)`.
    pub u: Vec<T>,
    /// `w / w(z₊)`.
    pub w: Vec<T>,
}

impl<T: Real> FieldMode<T> {
    /// From samples `(z, u, w)` ending at `z₊`; normalizes by `w(z₊)`.
    pub fn new(direction: Direction, l: T, lambda: T, amplitude: T, z: Vec<T>, u: Vec<T>, w: Vec<T>) -> Result<Self> {
        if z.len() < 4 || u.len() != z.len() || w.len() != z.len() {
            return Err(Error::InvalidInput("mode samples must have equal length (at least 4)".into()));
        }
        if !(lambda > T::zero()) || !(l >= T::zero()) {
            return Err(Error::InvalidInput("modes need lambda > 0 and l >= 0".into()));
        }
        let alpha = *w.last().expect("nonempty");
        if alpha == T::zero() || !alpha.is_finite() {
            return Err(Error::InvalidInput("mode has zero boundary trace w(z_plus)".into()));
        }
        let u = u.iter().map(|v| *v / alpha).collect();
        let w = w.iter().map(|v| *v / alpha).collect();
        Ok(Self { direction, l, lambda, amplitude, z, u, w })
    }

    /// From a reconstructed mode of the first-order system.
    pub fn from_mode(direction: Direction, l: T, amplitude: T, m: &ModeFunction<T>) -> Result<Self> {
        Self::new(direction, l, m.lambda, amplitude, m.z.clone(), m.u.clone(), m.w.clone())
    }

    /// From a vertical (`l = 0`) mode; `u ≡ 0`.
    pub fn from_vertical(amplitude: T, m: &VerticalModeFunction<T>) -> Result<Self> {
        Self::new(Direction::X, T::zero(), m.lambda, amplitude, m.z.clone(), vec![T::zero(); m.z.len()], m.w.clone())
    }

    pub fn omega(&self) -> T {
        self.lambda.sqrt()
    }

    fn profile_at(&self, z: T) -> (T, T) {
        (interp_cubic(&self.z, &self.u, z), interp_cubic(&self.z, &self.w, z))
    }

    /// Time factors of the two quadratures.
    fn quadratures(&self, kind: FieldKind, lambda: T, t: T) -> (T, T) {
        let wt = lambda.sqrt() * t;
        match kind {
            FieldKind::Standing => (wt.sin(), T::zero()),
            FieldKind::Progressive => (wt.cos(), wt.sin()),
        }
    }
}

/// A superposition of modes.
#[derive(Clone, Debug, PartialEq)]
pub struct PerturbationField<T> {
    pub kind: FieldKind,
    pub modes: Vec<FieldMode<T>>,
    pub x_plus: T,
    pub y_plus: T,
    pub z_plus: T,
}

fn check_period<T: Real>(l: T, period: T) -> Result<()> {
    if l == T::zero() {
        return Ok(());
    }
    let ratio = l * period / (T::lit(2.0) * T::PI());
    if (ratio - ratio.round()).abs() > T::floor_tol(T::lit(1e-12)) * ratio.abs().max(T::one()) {
        return Err(Error::PeriodMismatch { l: l.to_f64_lossy(), period: period.to_f64_lossy(), ratio: ratio.to_f64_lossy() });
    }
    Ok(())
}

/// Build a field of the given kind; every `l` must fit its period.
pub fn synthesize_field<T: Real>(kind: FieldKind, modes: Vec<FieldMode<T>>, x_plus: T, y_plus: T, z_plus: T) -> Result<PerturbationField<T>> {
    for m in &modes {
        let period = match m.direction {
            Direction::X => x_plus,
            Direction::Y => y_plus,
        };
        check_period(m.l, period)?;
    }
    Ok(PerturbationField { kind, modes, x_plus, y_plus, z_plus })
}

/// Standing-wave superposition.
pub fn standing_field<T: Real>(modes: Vec<FieldMode<T>>, x_plus: T, y_plus: T, z_plus: T) -> Result<PerturbationField<T>> {
    synthesize_field(FieldKind::Standing, modes, x_plus, y_plus, z_plus)
}

/// Progressive-wave superposition.
pub fn progressive_field<T: Real>(modes: Vec<FieldMode<T>>, x_plus: T, y_plus: T, z_plus: T) -> Result<PerturbationField<T>> {
    synthesize_field(FieldKind::Progressive, modes, x_plus, y_plus, z_plus)
}

impl<T: Real> PerturbationField<T> {
    /// `ξ(t, x, y, z) = (ξ¹, ξ², ξ³)`.
    pub fn xi(&self, t: T, x: T, y: T, z: T) -> [T; 3] {
        let mut out = [T::zero(); 3];
        for m in &self.modes {
            let (u, w) = m.profile_at(z);
            let (c, s) = m.quadratures(self.kind, m.lambda, t);
            let (h, k) = match m.direction {
                Direction::X => (m.l * x, 0),
                Direction::Y => (m.l * y, 1),
            };
            // c·(u sin h, w cos h) + s·(−u cos h, w sin h)
            out[k] = out[k] + m.amplitude * u * (c * h.sin() - s * h.cos());
            out[2] = out[2] + m.amplitude * w * (c * h.cos() + s * h.sin());
        }
        out
    }
}

/// Samples of the vibrating vacuum boundary in the plane `y = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundarySurface<T> {
    pub epsilon: T,
    pub times: Vec<T>,
    /// Eulerian abscissae `x̱`.
    pub xbar: Vec<T>,
    /// Lagrangian labels `x = Φ(t, x̱)`, indexed `[time][x]`.
    pub labels: Vec<Vec<T>>,
    /// Heights `ẕ(t, x̱)`, indexed `[time][x]`.
    pub zbar: Vec<Vec<T>>,
}

impl<T: Real> BoundarySurface<T> {
    /// Long-form CSV `t,x,xbar,zbar`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["t", "x", "xbar", "zbar"]).map_err(csv_err)?;
        for (i, t) in self.times.iter().enumerate() {
            for (j, xb) in self.xbar.iter().enumerate() {
                wtr.write_record([fmt_num(*t), fmt_num(self.labels[i][j]), fmt_num(*xb), fmt_num(self.zbar[i][j])]).map_err(csv_err)?;
            }
        }
        wtr.flush()?;
        Ok(())
    }
}

/// `ε Σ |a| l |u(z₊)|`, the Lipschitz constant of `x ↦ ε ξ¹(t, x, 0, z₊)`.
pub fn map_bound<T: Real>(field: &PerturbationField<T>, epsilon: T) -> T {
    field
        .modes
        .iter()
        .filter(|m| m.direction == Direction::X)
        .map(|m| m.amplitude.abs() * m.l * m.u.last().expect("nonempty").abs())
        .fold(T::zero(), |a, b| a + b)
        * epsilon.abs()
}

/// Boundary positions `x̱ = x + ε ξ¹(t, x, 0, z₊)`, `ẕ = z₊ + ε ξ³(t, x, 0, z₊)`,
/// solved for the label `x = Φ(t, x̱)` by fixed-point iteration.
pub fn boundary_motion<T: Real>(field: &PerturbationField<T>, epsilon: T, times: &[T], xbar: &[T]) -> Result<BoundarySurface<T>> {
    let bound = map_bound(field, epsilon);
    if !(bound < T::lit(INVERTIBILITY_MARGIN)) {
        return Err(Error::NonInvertibleMap { bound: bound.to_f64_lossy() });
    }
    let zp = field.z_plus;
    let tol = T::floor_tol(T::lit(LABEL_TOL));
    let mut labels = Vec::with_capacity(times.len());
    let mut zbar = Vec::with_capacity(times.len());
    for &t in times {
        let mut row_x = Vec::with_capacity(xbar.len());
        let mut row_z = Vec::with_capacity(xbar.len());
        for &xb in xbar {
            let mut x = xb;
            for _ in 0..200 {
                let next = xb - epsilon * field.xi(t, x, T::zero(), zp)[0];
                let done = (next - x).abs() <= tol * (T::one() + xb.abs());
                x = next;
                if done {
                    break;
                }
            }
            row_x.push(x);
            row_z.push(zp + epsilon * field.xi(t, x, T::zero(), zp)[2]);
        }
        labels.push(row_x);
        zbar.push(row_z);
    }
    Ok(BoundarySurface { epsilon, times: times.to_vec(), xbar: xbar.to_vec(), labels, zbar })
}

/// Mean of `ε ξ³(t, x, 0, z₊)` over `n` uniform labels spanning one period `x₊`.
pub fn mean_boundary_offset<T: Real>(field: &PerturbationField<T>, epsilon: T, t: T, n: usize) -> T {
    let zp = field.z_plus;
    let sum = (0..n).fold(T::zero(), |acc, j| {
        let x = field.x_plus * T::from_count(j) / T::from_count(n);
        acc + field.xi(t, x, T::zero(), zp)[2]
    });
    epsilon * sum / T::from_count(n)
}

/// Long-form snapshot CSV `t,x,z,xi1,xi3` (plane `y = 0`).
pub fn write_snapshot_csv<T: Real, W: Write>(out: W, field: &PerturbationField<T>, times: &[T], xs: &[T], zs: &[T]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["t", "x", "z", "xi1", "xi3"]).map_err(csv_err)?;
    for &t in times {
        for &x in xs {
            for &z in zs {
                let v = field.xi(t, x, T::zero(), z);
                wtr.write_record([fmt_num(t), fmt_num(x), fmt_num(z), fmt_num(v[0]), fmt_num(v[2])]).map_err(csv_err)?;
            }
        }
    }
    wtr.flush()?;
    Ok(())
}

/// Unnormalized residual and field size of the wave equation `ξ_tt + L ξ = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WaveResidual<T> {
    /// `sup_t ‖ξ_tt + Lξ‖`.
    pub residual: T,
    /// `sup_t ‖ξ‖`.
    pub field_norm: T,
}

impl<T: Real> WaveResidual<T> {
    pub fn relative(&self) -> T {
        if self.field_norm == T::zero() {
            T::zero()
        } else {
            self.residual / self.field_norm
        }
    }
}

/// `sup_t ‖ξ_tt + L ξ‖ / sup_t ‖ξ‖` over `times` (see [`wave_residual_parts`]).
pub fn wave_residual<T: Real>(field: &PerturbationField<T>, profile: &Arc<EquilibriumProfile<T>>, times: &[T]) -> Result<T> {
    Ok(wave_residual_parts(field, profile, times)?.relative())
}

/// Norms are `(∫ mean_{x,y} ρ |·|² dz)^{1/2}` over one horizontal period;
/// `ξ_tt` is a centred second difference with step [`TIME_STEP`] (the same for every
/// field, so the residual is linear in the field), and `L` is
/// [`apply_operator`] on each mode's samples.
pub fn wave_residual_parts<T: Real>(
    field: &PerturbationField<T>,
    profile: &Arc<EquilibriumProfile<T>>,
    times: &[T],
) -> Result<WaveResidual<T>> {
    if field.modes.is_empty() {
        return Ok(WaveResidual { residual: T::zero(), field_norm: T::zero() });
    }
    // Group modes by horizontal harmonic; distinct groups are orthogonal.
    let mut groups: Vec<(Direction, T, Vec<usize>)> = Vec::new();
    for (k, m) in field.modes.iter().enumerate() {
        match groups.iter_mut().find(|g| g.0 == m.direction && g.1 == m.l) {
            Some(g) => g.2.push(k),
            None => groups.push((m.direction, m.l, vec![k])),
        }
    }
    let h = T::lit(TIME_STEP);
    let mut ops = Vec::with_capacity(field.modes.len());
    for m in &field.modes {
        let spec = crate::fixedpoint::ModeSpec { l: m.l, x_plus: field.x_plus, y_plus: Some(field.y_plus), branch: crate::fixedpoint::Branch::G };
        ops.push(apply_operator(profile, &spec, &m.z, &m.u, &m.w)?);
    }
    let mut sup_r = T::zero();
    let mut sup_f = T::zero();
    for &t in times {
        let mut r2 = T::zero();
        let mut f2 = T::zero();
        for (_, l, idx) in &groups {
            let base = &field.modes[idx[0]];
            let z = &base.z;
            let rho: Vec<T> = z
                .iter()
                .map(|&zz| {
                    let s = profile.z_plus - zz;
                    if s > T::zero() { profile.eval_depth(s).map(|f| f.rho) } else { Ok(T::zero()) }
                })
                .collect::<Result<_>>()?;
            let n = z.len();
            // [quadrature][component u/w] samples of residual and field.
            let mut res = [[vec![T::zero(); n], vec![T::zero(); n]], [vec![T::zero(); n], vec![T::zero(); n]]];
            let mut fld = res.clone();
            for &k in idx {
                let m = &field.modes[k];
                let (c0, s0) = m.quadratures(field.kind, m.lambda, t);
                let (cp, sp) = m.quadratures(field.kind, m.lambda, t + h);
                let (cm, sm) = m.quadratures(field.kind, m.lambda, t - h);
                let q = [c0, s0];
                let qtt = [(cp - c0 - c0 + cm) / (h * h), (sp - s0 - s0 + sm) / (h * h)];
                let (lu, lw) = &ops[k];
                let same = m.z == *z;
                let at = |v: &[T], j: usize| if same { v[j] } else { interp_cubic(&m.z, v, z[j]) };
                for j in 0..n {
                    let (u, w, lu, lw) = (at(&m.u, j), at(&m.w, j), at(lu, j), at(lw, j));
                    for qi in 0..2 {
                        res[qi][0][j] = res[qi][0][j] + m.amplitude * (qtt[qi] * u + q[qi] * lu);
                        res[qi][1][j] = res[qi][1][j] + m.amplitude * (qtt[qi] * w + q[qi] * lw);
                        fld[qi][0][j] = fld[qi][0][j] + m.amplitude * q[qi] * u;
                        fld[qi][1][j] = fld[qi][1][j] + m.amplitude * q[qi] * w;
                    }
                }
            }
            // Horizontal means: ½ per trigonometric factor, except l = 0 (cos ≡ 1, sin ≡ 0).
            let norm2 = |a: &[Vec<T>; 2], b: &[Vec<T>; 2]| -> T {
                if *l == T::zero() {
                    weighted_inner(z, &rho, &a[1], &a[1])
                } else {
                    T::lit(0.5)
                        * (weighted_inner(z, &rho, &a[0], &a[0])
                            + weighted_inner(z, &rho, &a[1], &a[1])
                            + weighted_inner(z, &rho, &b[0], &b[0])
                            + weighted_inner(z, &rho, &b[1], &b[1]))
                }
            };
            r2 = r2 + norm2(&res[0], &res[1]);
            f2 = f2 + norm2(&fld[0], &fld[1]);
        }
        sup_r = sup_r.max(r2.sqrt());
        sup_f = sup_f.max(f2.sqrt());
    }
    Ok(WaveResidual { residual: sup_r, field_norm: sup_f })
}
