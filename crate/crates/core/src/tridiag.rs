//! Symmetric tridiagonal eigenvalues by Sturm-sequence bisection with a
//! *relative* stopping criterion, and eigenvectors by inverse iteration.
//!
//! Relative stopping matters here: graded-mesh discretizations of singular
//! problems have matrix norms many orders of magnitude above the low
//! eigenvalues, so absolute (norm-scaled) tolerances lose most digits.

use crate::real::Real;

/// Symmetric tridiagonal matrix with diagonal `d` and off-diagonal `e` (`e.len() = d.len() - 1`).
#[derive(Clone, Debug)]
pub struct SymTridiag<T> {
    pub d: Vec<T>,
    pub e: Vec<T>,
}

impl<T: Real> SymTridiag<T> {
    pub fn new(d: Vec<T>, e: Vec<T>) -> Self {
        assert!(d.len() >= 1 && e.len() + 1 == d.len());
        Self { d, e }
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    /// Gershgorin enclosure of the spectrum.
    pub fn gershgorin(&self) -> (T, T) {
        let n = self.d.len();
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        for i in 0..n {
            let r = (if i > 0 { self.e[i - 1].abs() } else { T::zero() })
                + (if i + 1 < n { self.e[i].abs() } else { T::zero() });
            lo = lo.min(self.d[i] - r);
            hi = hi.max(self.d[i] + r);
        }
        (lo, hi)
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn count_below(&self, x: T) -> usize {
        let pivmin = T::min_positive_value() * T::lit(1e10);
        let mut count = 0;
        let mut q = self.d[0] - x;
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < T::zero() {
            count += 1;
        }
        for i in 1..self.d.len() {
            let e2 = self.e[i - 1] * self.e[i - 1];
            q = self.d[i] - x - e2 / q;
            if q.abs() < pivmin {
                q = -pivmin;
            }
            if q < T::zero() {
                count += 1;
            }
        }
        count
    }

    /// The `k`-th smallest eigenvalue (`k ≥ 1`), bisected to relative width `rtol`.
    pub fn eigenvalue(&self, k: usize, rtol: T) -> T {
        let (glo, ghi) = self.gershgorin();
        self.eigenvalue_in(k, glo, ghi, rtol)
    }

    /// As [`eigenvalue`](Self::eigenvalue) with a caller-supplied enclosure `[lo, hi]`.
    pub fn eigenvalue_in(&self, k: usize, lo: T, hi: T, rtol: T) -> T {
        assert!(k >= 1 && k <= self.d.len());
        let rtol = T::floor_tol(rtol) * T::lit(0.25);
        let (mut lo, mut hi) = (lo, hi);
        let widen = T::one() + T::lit(1e-12);
        lo = if lo > T::zero() { lo / widen } else { lo * widen - T::min_positive_value() };
        hi = if hi > T::zero() { hi * widen + T::min_positive_value() } else { hi / widen };
        for _ in 0..2000 {
            let mid = (lo + hi) * T::lit(0.5);
            if mid <= lo || mid >= hi {
                break;
            }
            if hi - lo <= rtol * lo.abs().max(hi.abs()) {
                break;
            }
            if self.count_below(mid) >= k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        (lo + hi) * T::lit(0.5)
    }

    /// Eigenvector for the (accurate) eigenvalue `lambda`, unit Euclidean norm.
    pub fn eigenvector(&self, lambda: T) -> Vec<T> {
        let n = self.d.len();
        if n == 1 {
            return vec![T::one()];
        }
        let scale = self.d.iter().chain(self.e.iter()).fold(T::zero(), |m, v| m.max(v.abs()));
        let shift = lambda + lambda.abs().max(scale * T::epsilon()) * T::epsilon() * T::lit(4.0);
        let lu = BandLu::factor(self, shift, scale);
        // Deterministic, non-degenerate start vector.
        let mut x: Vec<T> = (0..n)
            .map(|i| T::one() + T::lit(0.1) * (T::from_count(i) * T::lit(0.618_033_988_749_895)).sin())
            .collect();
        for _ in 0..4 {
            x = lu.solve(&x);
            let nrm = x.iter().fold(T::zero(), |s, v| s + *v * *v).sqrt();
            if !(nrm > T::zero()) || !nrm.is_finite() {
                break;
            }
            for v in x.iter_mut() {
                *v = *v / nrm;
            }
        }
        x
    }
}

/// LU factorization with partial pivoting of `T - σI` for tridiagonal `T`.
struct BandLu<T> {
    u0: Vec<T>,
    u1: Vec<T>,
    u2: Vec<T>,
    mult: Vec<T>,
    swapped: Vec<bool>,
}

impl<T: Real> BandLu<T> {
    fn factor(t: &SymTridiag<T>, sigma: T, scale: T) -> Self {
        let n = t.d.len();
        let tiny = scale.max(T::min_positive_value()) * T::epsilon();
        let mut u0: Vec<T> = t.d.iter().map(|&v| v - sigma).collect();
        let mut u1: Vec<T> = (0..n).map(|i| if i + 1 < n { t.e[i] } else { T::zero() }).collect();
        let mut u2 = vec![T::zero(); n];
        let mut mult = vec![T::zero(); n];
        let mut swapped = vec![false; n];
        for i in 0..n - 1 {
            let sub = t.e[i];
            if sub.abs() > u0[i].abs() {
                // Swap rows i and i+1.
                let (a0, a1, a2) = (u0[i], u1[i], u2[i]);
                u0[i] = sub;
                u1[i] = u0[i + 1];
                u2[i] = u1[i + 1];
                let m = a0 / sub;
                u0[i + 1] = a1 - m * u1[i];
                u1[i + 1] = a2 - m * u2[i];
                mult[i] = m;
                swapped[i] = true;
            } else {
                if u0[i] == T::zero() {
                    u0[i] = tiny;
                }
                let m = sub / u0[i];
                u0[i + 1] = u0[i + 1] - m * u1[i];
                u1[i + 1] = u1[i + 1] - m * u2[i];
                mult[i] = m;
            }
        }
        if u0[n - 1] == T::zero() {
            u0[n - 1] = tiny;
        }
        Self { u0, u1, u2, mult, swapped }
    }

    fn solve(&self, b: &[T]) -> Vec<T> {
        let n = b.len();
        let mut y = b.to_vec();
        for i in 0..n - 1 {
            if self.swapped[i] {
                y.swap(i, i + 1);
            }
            y[i + 1] = y[i + 1] - self.mult[i] * y[i];
        }
        let mut x = vec![T::zero(); n];
        for i in (0..n).rev() {
            let mut acc = y[i];
            if i + 1 < n {
                acc = acc - self.u1[i] * x[i + 1];
            }
            if i + 2 < n {
                acc = acc - self.u2[i] * x[i + 2];
            }
            x[i] = acc / self.u0[i];
        }
        x
    }
}
