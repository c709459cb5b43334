//! Scalar root finding: Brent's method on a bracket and a safeguarded Newton iteration.

use crate::error::{Error, Result};
use crate::real::Real;

/// Outcome of a bracketed root search.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RootBracket<T> {
    pub root: T,
    /// Final bracketing interval `[lo, hi]` (sign change preserved).
    pub lo: T,
    pub hi: T,
    pub iterations: usize,
}

/// Brent's method for `f(x) = 0` on `[a, b]` with `f(a) f(b) ≤ 0`.
///
/// Stops when the bracket width falls below `xtol + rtol·|x|`.
pub fn brent<T: Real, F: FnMut(T) -> T>(
    mut f: F,
    a: T,
    b: T,
    xtol: T,
    rtol: T,
    max_iter: usize,
) -> Result<RootBracket<T>> {
    let fa = f(a);
    let fb = f(b);
    brent_with_values(f, a, b, fa, fb, xtol, rtol, max_iter)
}

/// As [`brent`] with the endpoint values already known.
#[allow(clippy::too_many_arguments)]
pub fn brent_with_values<T: Real, F: FnMut(T) -> T>(
    mut f: F,
    a: T,
    b: T,
    fa: T,
    fb: T,
    xtol: T,
    rtol: T,
    max_iter: usize,
) -> Result<RootBracket<T>> {
    let two = T::lit(2.0);
    let half = T::lit(0.5);
    if !(fa.is_finite() && fb.is_finite()) {
        return Err(Error::InvalidInput("non-finite function value at bracket end".into()));
    }
    if fa == T::zero() {
        return Ok(RootBracket { root: a, lo: a, hi: a, iterations: 0 });
    }
    if fb == T::zero() {
        return Ok(RootBracket { root: b, lo: b, hi: b, iterations: 0 });
    }
    if (fa > T::zero()) == (fb > T::zero()) {
        return Err(Error::InvalidInput("root not bracketed".into()));
    }
    let (mut a, mut b, mut fa, mut fb) = (a, b, fa, fb);
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for it in 0..max_iter {
        if (fb > T::zero()) == (fc > T::zero()) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = half * (xtol + rtol * b.abs()) + T::epsilon() * b.abs();
        let m = half * (c - b);
        if m.abs() <= tol || fb == T::zero() {
            let (lo, hi) = if b < c { (b, c) } else { (c, b) };
            return Ok(RootBracket { root: b, lo, hi, iterations: it });
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = two * m * s;
                q = T::one() - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (two * m * qq * (qq - r) - (b - a) * (r - T::one()));
                q = (qq - T::one()) * (r - T::one()) * (s - T::one());
            }
            if p > T::zero() {
                q = -q;
            } else {
                p = -p;
            }
            if two * p < (T::lit(3.0) * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b = if d.abs() > tol { b + d } else if m > T::zero() { b + tol } else { b - tol };
        fb = f(b);
        if !fb.is_finite() {
            return Err(Error::InvalidInput("non-finite function value inside bracket".into()));
        }
    }
    Err(Error::InvalidInput("Brent iteration limit reached".into()))
}

/// Plain bisection to absolute width `xtol` (used where only the sign is trusted).
pub fn bisect<T: Real, F: FnMut(T) -> bool>(mut positive: F, lo: T, hi: T, xtol: T, max_iter: usize) -> (T, T) {
    // Invariant: positive(lo) != positive(hi).
    let (mut lo, mut hi) = (lo, hi);
    let plo = positive(lo);
    for _ in 0..max_iter {
        if (hi - lo).abs() <= xtol {
            break;
        }
        let mid = (lo + hi) * T::lit(0.5);
        if positive(mid) == plo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}

/// Solve `f(x) = target` for increasing `f` on `[lo, hi]` by Newton steps
/// safeguarded with bisection; converges to relative tolerance `rtol`.
///
/// `fd` returns `(f(x), f'(x))`.
pub fn newton_increasing<T: Real, F: FnMut(T) -> (T, T)>(
    mut fd: F,
    target: T,
    lo: T,
    hi: T,
    x0: T,
    rtol: T,
    max_iter: usize,
) -> Result<T> {
    let (mut lo, mut hi) = (lo, hi);
    let mut x = if x0 > lo && x0 < hi { x0 } else { (lo + hi) * T::lit(0.5) };
    for _ in 0..max_iter {
        let (fx, dfx) = fd(x);
        let r = fx - target;
        if r == T::zero() {
            return Ok(x);
        }
        if r > T::zero() {
            hi = x;
        } else {
            lo = x;
        }
        let mut xn = if dfx > T::zero() && dfx.is_finite() { x - r / dfx } else { T::nan() };
        if !(xn > lo && xn < hi) {
            xn = (lo + hi) * T::lit(0.5);
        }
        if (xn - x).abs() <= rtol * xn.abs() {
            return Ok(xn);
        }
        if hi - lo <= rtol * hi.abs() {
            return Ok((lo + hi) * T::lit(0.5));
        }
        x = xn;
    }
    Err(Error::InversionFailure(format!(
        "no convergence to relative tolerance {:e} within {} iterations",
        rtol.to_f64_lossy(),
        max_iter
    )))
}
