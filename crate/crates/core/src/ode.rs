//! Adaptive Dormand–Prince 5(4) integrator for small fixed-size linear and
//! nonlinear ODE systems.

use crate::error::{Error, Result};
use crate::real::Real;

/// Step-size control options.
#[derive(Clone, Copy, Debug)]
pub struct OdeOptions<T> {
    /// Relative tolerance applied to the Euclidean norm of the state.
    pub rtol: T,
    /// Absolute floor of the error scale.
    pub atol: T,
    /// Initial step magnitude (0 = automatic).
    pub h0: T,
    /// Maximum number of attempted steps per call.
    pub max_steps: usize,
}

impl<T: Real> Default for OdeOptions<T> {
    fn default() -> Self {
        Self { rtol: T::lit(1e-10), atol: T::lit(1e-300).max(T::min_positive_value()), h0: T::zero(), max_steps: 200_000 }
    }
}

impl<T: Real> OdeOptions<T> {
    pub fn with_rtol(rtol: T) -> Self {
        Self { rtol: T::floor_tol(rtol), ..Self::default() }
    }
}

/// Integrator state: current abscissa, state vector and proposed next step.
#[derive(Clone, Debug)]
pub struct Integrator<T, const N: usize> {
    pub t: T,
    pub y: [T; N],
    h: T,
    opts: OdeOptions<T>,
    pub accepted: usize,
    pub rejected: usize,
}

// Dormand–Prince tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy<T: Real, const N: usize>(y: &[T; N], terms: &[(T, &[T; N])]) -> [T; N] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] = out[i] + *c * k[i];
        }
    }
    out
}

fn norm<T: Real, const N: usize>(y: &[T; N]) -> T {
    y.iter().fold(T::zero(), |s, &v| s + v * v).sqrt()
}

impl<T: Real, const N: usize> Integrator<T, N> {
    pub fn new(t0: T, y0: [T; N], opts: OdeOptions<T>) -> Self {
        Self { t: t0, y: y0, h: opts.h0, opts, accepted: 0, rejected: 0 }
    }

    /// Advance exactly to `t_end` (either direction), calling `observe(t, y)`
    /// after each accepted step.
    pub fn advance<F, O>(&mut self, t_end: T, f: &mut F, observe: &mut O) -> Result<()>
    where
        F: FnMut(T, &[T; N]) -> [T; N],
        O: FnMut(T, &[T; N]),
    {
        let span = t_end - self.t;
        if span == T::zero() {
            return Ok(());
        }
        let dir = span.signum();
        let lit = T::lit;
        let mut k1 = f(self.t, &self.y);
        if self.h == T::zero() || self.h.signum() != dir {
            // Initial step from the local scale of y / y'.
            let yn = norm(&self.y);
            let dn = norm(&k1);
            let scale = self.opts.atol + self.opts.rtol * yn;
            let mut h = if dn > T::zero() && yn > T::zero() {
                lit(0.01) * (yn / dn) * (self.opts.rtol / lit(1e-6)).powf(lit(0.2)).min(T::one())
            } else {
                span.abs() * lit(1e-3)
            };
            if !(h > T::zero()) || scale == T::zero() {
                h = span.abs() * lit(1e-3);
            }
            self.h = h.min(span.abs()) * dir;
        }
        let mut steps = 0usize;
        loop {
            let remaining = t_end - self.t;
            if remaining == T::zero() || (remaining.signum() != dir) {
                self.t = t_end;
                return Ok(());
            }
            let mut h = self.h;
            let last = h.abs() >= remaining.abs() * (T::one() - lit(1e-12));
            if last {
                h = remaining;
            }
            steps += 1;
            if steps > self.opts.max_steps {
                return Err(Error::StepFailure { at: self.t.to_f64_lossy(), detail: "step limit exceeded".into() });
            }
            let t = self.t;
            let y = self.y;
            let k2 = f(t + lit(C2) * h, &axpy(&y, &[(h * lit(A21), &k1)]));
            let k3 = f(t + lit(C3) * h, &axpy(&y, &[(h * lit(A31), &k1), (h * lit(A32), &k2)]));
            let k4 = f(t + lit(C4) * h, &axpy(&y, &[(h * lit(A41), &k1), (h * lit(A42), &k2), (h * lit(A43), &k3)]));
            let k5 = f(
                t + lit(C5) * h,
                &axpy(&y, &[(h * lit(A51), &k1), (h * lit(A52), &k2), (h * lit(A53), &k3), (h * lit(A54), &k4)]),
            );
            let k6 = f(
                t + h,
                &axpy(
                    &y,
                    &[(h * lit(A61), &k1), (h * lit(A62), &k2), (h * lit(A63), &k3), (h * lit(A64), &k4), (h * lit(A65), &k5)],
                ),
            );
            let yn = axpy(&y, &[(h * lit(B1), &k1), (h * lit(B3), &k3), (h * lit(B4), &k4), (h * lit(B5), &k5), (h * lit(B6), &k6)]);
            let t_new = if last { t_end } else { t + h };
            let k7 = f(t_new, &yn);
            let mut err = [T::zero(); N];
            for i in 0..N {
                err[i] = h
                    * (lit(E1) * k1[i] + lit(E3) * k3[i] + lit(E4) * k4[i] + lit(E5) * k5[i] + lit(E6) * k6[i] + lit(E7) * k7[i]);
            }
            let scale = self.opts.atol + self.opts.rtol * norm(&y).max(norm(&yn));
            let en = norm(&err) / scale;
            if !en.is_finite() || yn.iter().any(|v| !v.is_finite()) {
                self.rejected += 1;
                self.h = h * lit(0.2);
                if self.h.abs() <= T::epsilon() * t.abs().max(T::min_positive_value()) {
                    return Err(Error::StepFailure { at: t.to_f64_lossy(), detail: "non-finite derivative".into() });
                }
                continue;
            }
            if en <= T::one() {
                self.t = t_new;
                self.y = yn;
                self.accepted += 1;
                observe(self.t, &self.y);
                k1 = k7;
                let fac = if en == T::zero() { lit(5.0) } else { (lit(0.9) * en.powf(lit(-0.2))).min(lit(5.0)).max(lit(0.2)) };
                if !last {
                    self.h = h * fac;
                } else if fac > T::one() {
                    self.h = self.h * fac.min(lit(2.0));
                }
                if last {
                    self.t = t_end;
                    return Ok(());
                }
            } else {
                self.rejected += 1;
                let fac = (lit(0.9) * en.powf(lit(-0.2))).max(lit(0.1));
                self.h = h * fac;
                if self.h.abs() <= T::epsilon() * lit(4.0) * t.abs().max(h.abs() * lit(1e-300).max(T::min_positive_value())) {
                    return Err(Error::StepFailure { at: t.to_f64_lossy(), detail: "step size underflow".into() });
                }
            }
        }
    }
}

/// Integrate from `t0` to `t1` and return the final state.
pub fn integrate<T: Real, const N: usize, F: FnMut(T, &[T; N]) -> [T; N]>(
    mut f: F,
    t0: T,
    y0: [T; N],
    t1: T,
    opts: OdeOptions<T>,
) -> Result<[T; N]> {
    let mut it = Integrator::new(t0, y0, opts);
    it.advance(t1, &mut f, &mut |_, _| {})?;
    Ok(it.y)
}

/// Integrate through the ordered list `points` (starting from `t0`) and return
/// the state at each point.
pub fn integrate_to_points<T: Real, const N: usize, F: FnMut(T, &[T; N]) -> [T; N]>(
    mut f: F,
    t0: T,
    y0: [T; N],
    points: &[T],
    opts: OdeOptions<T>,
) -> Result<Vec<[T; N]>> {
    let mut it = Integrator::new(t0, y0, opts);
    let mut out = Vec::with_capacity(points.len());
    for &p in points {
        it.advance(p, &mut f, &mut |_, _| {})?;
        out.push(it.y);
    }
    Ok(out)
}
