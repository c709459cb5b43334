//! Graded-mesh finite-difference oracle.
//!
//! Nodes `z_j = L(1 − (1 − j/N)²)` cluster at the singular end.  The operator
//! is the conservative three-point form with `a` sampled at cell midpoints,
//! `b` and `κ` at the nodes and a lumped mass, which gives a symmetric
//! generalized problem `K w = Λ M w`; it is reduced to a symmetric tridiagonal
//! matrix by the diagonal scaling `M^{-1/2} K M^{-1/2}` and solved by Sturm
//! bisection.  The right end is Dirichlet when `a` does not vanish there and
//! no-flux (last cell dropped) when `a ~ s^p` with `p ≥ 1`.

use super::problem::{LeftBoundary, RightEnd, SLProblem};
use super::{Eigenpair, SolveMethod};
use crate::error::{Error, Result};
use crate::real::Real;
use crate::tridiag::SymTridiag;

/// Mesh and refinement controls for [`fd_eigensolve`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeshSpec<T> {
    /// Number of cells on the coarsest level.
    pub cells: usize,
    /// Number of dyadic levels (≥ 2); the two finest are Richardson-extrapolated.
    pub levels: usize,
    /// Maximal relative disagreement between the two finest levels.
    pub tol: T,
    /// Compute eigenvectors on the finest level.
    pub vectors: bool,
}

impl<T: Real> Default for MeshSpec<T> {
    fn default() -> Self {
        Self { cells: 1000, levels: 2, tol: T::lit(1e-2), vectors: true }
    }
}

impl<T: Real> MeshSpec<T> {
    pub fn new(cells: usize, levels: usize) -> Self {
        Self { cells, levels, ..Self::default() }
    }
}

/// The assembled discrete problem at one resolution.
pub struct Discretization<T> {
    /// Node heights `z_0..z_N`.
    pub z: Vec<T>,
    /// Node depths `s_j = L − z_j` computed without cancellation.
    pub s: Vec<T>,
    /// Indices of the unknown nodes (contiguous).
    pub first: usize,
    pub last: usize,
    /// Lumped weighted mass `κ_j m_j` of the unknown nodes.
    pub mass: Vec<T>,
    /// Scaled symmetric matrix `M^{-1/2} K M^{-1/2}`.
    pub matrix: SymTridiag<T>,
    /// True when the right end is treated as no-flux.
    pub natural_right: bool,
}

/// Whether the right end uses the no-flux treatment.
fn natural_right<T: Real>(p: &SLProblem<T>) -> Result<bool> {
    match p.right {
        RightEnd::Regular => Ok(false),
        RightEnd::Singular(e) => {
            if e.a_power >= T::one() {
                Ok(true)
            } else if e.a_power <= T::zero() {
                Ok(false)
            } else {
                Err(Error::InvalidInput(format!(
                    "finite-difference oracle needs a_power <= 0 or >= 1 at the singular end (got {})",
                    e.a_power.to_f64_lossy()
                )))
            }
        }
    }
}

/// Assemble the discrete problem with `n` cells.
pub fn discretize<T: Real>(p: &SLProblem<T>, n: usize) -> Result<Discretization<T>> {
    if n < 4 {
        return Err(Error::GridTooCoarse { points: n + 1, required: 5 });
    }
    let natural = natural_right(p)?;
    let big_l = p.length;
    let nn = T::from_count(n);
    let s: Vec<T> = (0..=n)
        .map(|j| {
            let r = T::one() - T::from_count(j) / nn;
            big_l * r * r
        })
        .collect();
    let z: Vec<T> = s.iter().map(|&sj| big_l - sj).collect();
    let h: Vec<T> = (0..n).map(|j| s[j] - s[j + 1]).collect();
    let half = T::lit(0.5);
    let a_mid = (0..n)
        .map(|j| {
            let sm = (s[j] + s[j + 1]) * half;
            p.coeffs.values(big_l - sm, sm).map(|v| v.0)
        })
        .collect::<Result<Vec<T>>>()?;
    let first = match p.left {
        LeftBoundary::Dirichlet => 1,
        LeftBoundary::Robin { .. } => 0,
    };
    let last = n - 1;
    let mut diag = Vec::with_capacity(last + 1 - first);
    let mut mass = Vec::with_capacity(last + 1 - first);
    for j in first..=last {
        let (a_j, b_j, k_j) = p.coeffs.values(z[j], s[j])?;
        if !(k_j > T::zero()) || !k_j.is_finite() {
            return Err(Error::InvalidInput(format!("weight kappa must be positive (kappa = {} at z = {})", k_j.to_f64_lossy(), z[j].to_f64_lossy())));
        }
        let m = if j == 0 { h[0] * half } else { (h[j - 1] + h[j]) * half };
        let mut d = b_j * m;
        if !(natural && j == last) {
            d = d + a_mid[j] / h[j];
        }
        if j > 0 {
            d = d + a_mid[j - 1] / h[j - 1];
        } else if let LeftBoundary::Robin { ratio } = p.left {
            d = d + ratio * a_j;
        }
        diag.push(d);
        mass.push(k_j * m);
    }
    let d: Vec<T> = diag.iter().zip(&mass).map(|(d, m)| *d / *m).collect();
    let e: Vec<T> = (first..last)
        .map(|j| {
            let i = j - first;
            -a_mid[j] / h[j] / (mass[i] * mass[i + 1]).sqrt()
        })
        .collect();
    Ok(Discretization { z, s, first, last, mass, matrix: SymTridiag::new(d, e), natural_right: natural })
}

impl<T: Real> Discretization<T> {
    /// The `k` smallest eigenvalues.
    pub fn eigenvalues(&self, k: usize) -> Result<Vec<T>> {
        if k > self.matrix.len() {
            return Err(Error::IndexOutOfRange { index: k, available: self.matrix.len() });
        }
        let (glo, ghi) = self.matrix.gershgorin();
        let rtol = T::lit(1e-15);
        let mut out: Vec<T> = Vec::with_capacity(k);
        for i in 1..=k {
            let lo = out.last().copied().unwrap_or(glo);
            out.push(self.matrix.eigenvalue_in(i, lo.min(ghi), ghi, rtol));
        }
        Ok(out)
    }

    /// Eigenvector in original variables on all nodes, normalized to `Σ κ m w² = 1`,
    /// positive next to the right end.  Also returns the scaled residual
    /// `‖(A − Λ)y‖ / max(|Λ|, 1)`.
    pub fn eigenfunction(&self, lambda: T) -> (Vec<T>, T) {
        let y = self.matrix.eigenvector(lambda);
        let a = &self.matrix;
        let n = y.len();
        let mut res = T::zero();
        for i in 0..n {
            let mut r = (a.d[i] - lambda) * y[i];
            if i > 0 {
                r = r + a.e[i - 1] * y[i - 1];
            }
            if i + 1 < n {
                r = r + a.e[i] * y[i + 1];
            }
            res = res + r * r;
        }
        let ynorm = y.iter().fold(T::zero(), |s, v| s + *v * *v).sqrt();
        let residual = res.sqrt() / ynorm / lambda.abs().max(T::one());
        let nodes = self.z.len();
        let mut w = vec![T::zero(); nodes];
        for (i, yi) in y.iter().enumerate() {
            w[self.first + i] = *yi / self.mass[i].sqrt();
        }
        if self.natural_right {
            // No-flux end: the solution is flat at the last node.
            let k = nodes - 1;
            w[k] = w[k - 1];
        }
        let norm = self.mass.iter().enumerate().fold(T::zero(), |acc, (i, m)| acc + *m * w[self.first + i] * w[self.first + i]).sqrt();
        let sign = orientation(&w[self.first..=self.last]);
        for v in w.iter_mut() {
            *v = *v * sign / norm;
        }
        (w, residual)
    }
}

/// `+1` or `−1` so that the last significant sample is positive.
pub(crate) fn orientation<T: Real>(w: &[T]) -> T {
    let max = w.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let thresh = max * T::lit(1e-6);
    for v in w.iter().rev() {
        if v.abs() > thresh {
            return if *v > T::zero() { T::one() } else { -T::one() };
        }
    }
    T::one()
}

/// Number of sign changes, ignoring samples below `1e-9·max|w|`.
pub fn sign_changes<T: Real>(w: &[T]) -> usize {
    let max = w.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let thresh = max * T::lit(1e-9);
    let mut count = 0;
    let mut prev: Option<bool> = None;
    for v in w {
        if v.abs() <= thresh {
            continue;
        }
        let pos = *v > T::zero();
        if let Some(p) = prev {
            if p != pos {
                count += 1;
            }
        }
        prev = Some(pos);
    }
    count
}

/// The `n_max` smallest eigenpairs from the finite-difference oracle.
///
/// Eigenvalues are Richardson-extrapolated from the two finest levels; the
/// eigenfunctions come from the finest level.  With three or more levels the
/// observed convergence order is reported.
pub fn fd_eigensolve<T: Real>(p: &SLProblem<T>, n_max: usize, mesh: MeshSpec<T>) -> Result<Vec<Eigenpair<T>>> {
    if n_max == 0 {
        return Ok(Vec::new());
    }
    let levels = mesh.levels.max(2);
    let mut values: Vec<Vec<T>> = Vec::with_capacity(levels);
    let mut finest = None;
    for lev in 0..levels {
        let cells = mesh.cells << lev;
        let disc = discretize(p, cells)?;
        values.push(disc.eigenvalues(n_max)?);
        if lev + 1 == levels {
            finest = Some(disc);
        }
    }
    let disc = finest.expect("at least two levels");
    let three = T::lit(3.0);
    let mut out = Vec::with_capacity(n_max);
    for k in 0..n_max {
        let fine = values[levels - 1][k];
        let coarse = values[levels - 2][k];
        let diff = (fine - coarse).abs();
        if diff > mesh.tol * fine.abs().max(T::min_positive_value()) {
            return Err(Error::MeshTooCoarse {
                index: k + 1,
                coarse: coarse.to_f64_lossy(),
                fine: fine.to_f64_lossy(),
                tol: mesh.tol.to_f64_lossy(),
            });
        }
        let extrapolated = (T::lit(4.0) * fine - coarse) / three;
        let order = if levels >= 3 {
            let c2 = values[levels - 3][k];
            let r = (c2 - coarse).abs() / diff;
            if r > T::zero() && r.is_finite() {
                Some(r.log2())
            } else {
                None
            }
        } else {
            None
        };
        let (z, w, residual, zeros) = if mesh.vectors {
            let (w, residual) = disc.eigenfunction(fine);
            let zeros = sign_changes(&w[disc.first..=disc.last]);
            (disc.z.clone(), w, residual, zeros)
        } else {
            (Vec::new(), Vec::new(), T::zero(), k)
        };
        out.push(Eigenpair {
            index: k + 1,
            value: extrapolated,
            z,
            w,
            v: Vec::new(),
            residual,
            method: SolveMethod::Oracle,
            zeros,
            error_estimate: diff / three,
            order,
        });
    }
    Ok(out)
}
