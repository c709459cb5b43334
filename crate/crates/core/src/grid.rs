//! Sample grids with attached quadrature weights, and finite-difference
//! differentiation on nonuniform grids (Fornberg weights).

use crate::error::{Error, Result};
use crate::real::Real;

/// Nodes on an interval together with quadrature weights.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid<T> {
    pub z: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Real> Grid<T> {
    /// Graded mesh `z_j = L(1 - (1 - j/N)^2)`, `j = 0..=N`, clustering at `z = L`.
    ///
    /// Weights are composite Simpson in the uniform parameter `t = j/N`
    /// (so `N` is rounded up to even) multiplied by `dz/dt = 2L(1-t)`; this is
    /// high-order accurate for integrands that are smooth in `t`, which includes
    /// the half-integer powers of `L - z` met at the vacuum boundary.
    pub fn graded(length: T, n: usize) -> Self {
        let n = (n.max(2) + 1) / 2 * 2;
        let nn = T::from_count(n);
        let two = T::lit(2.0);
        let h = T::one() / nn;
        let mut z = Vec::with_capacity(n + 1);
        let mut w = Vec::with_capacity(n + 1);
        for j in 0..=n {
            let t = T::from_count(j) / nn;
            let r = T::one() - t;
            z.push(length * (T::one() - r * r));
            let simpson = if j == 0 || j == n {
                T::one()
            } else if j % 2 == 1 {
                T::lit(4.0)
            } else {
                two
            };
            w.push(simpson * h / T::lit(3.0) * two * length * r);
        }
        z[n] = length;
        Self { z, weights: w }
    }

    /// Uniform grid with `n` intervals on `[a, b]` and composite Simpson weights (`n` rounded up to even).
    pub fn uniform(a: T, b: T, n: usize) -> Self {
        let n = (n.max(2) + 1) / 2 * 2;
        let h = (b - a) / T::from_count(n);
        let z = (0..=n).map(|j| a + h * T::from_count(j)).collect();
        let weights = (0..=n)
            .map(|j| {
                let s = if j == 0 || j == n {
                    T::one()
                } else if j % 2 == 1 {
                    T::lit(4.0)
                } else {
                    T::lit(2.0)
                };
                s * h / T::lit(3.0)
            })
            .collect();
        Self { z, weights }
    }

    /// Arbitrary increasing nodes with trapezoidal weights.
    pub fn from_nodes(z: Vec<T>) -> Result<Self> {
        if z.len() < 2 {
            return Err(Error::GridTooCoarse { points: z.len(), required: 2 });
        }
        if z.windows(2).any(|p| !(p[1] > p[0])) {
            return Err(Error::InvalidInput("grid nodes must be strictly increasing".into()));
        }
        let n = z.len();
        let half = T::lit(0.5);
        let weights = (0..n)
            .map(|j| {
                let left = if j > 0 { z[j] - z[j - 1] } else { T::zero() };
                let right = if j + 1 < n { z[j + 1] - z[j] } else { T::zero() };
                (left + right) * half
            })
            .collect();
        Ok(Self { z, weights })
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    /// `Σ w_j f_j`.
    pub fn integrate(&self, f: &[T]) -> T {
        self.weights.iter().zip(f).fold(T::zero(), |s, (w, v)| s + *w * *v)
    }

    /// Restriction to the first `m` nodes with trapezoidal weights (used for partial data).
    pub fn truncated(&self, m: usize) -> Result<Self> {
        Self::from_nodes(self.z[..m.min(self.z.len())].to_vec())
    }
}

/// Fornberg's finite-difference weights for the `m`-th derivative at `x0`
/// using nodes `xs` (returns weights for derivative orders `0..=m`, last row is order `m`).
pub fn fornberg<T: Real>(x0: T, xs: &[T], m: usize) -> Vec<Vec<T>> {
    let n = xs.len();
    let mut c = vec![vec![T::zero(); n]; m + 1];
    c[0][0] = T::one();
    let mut c1 = T::one();
    let mut c4 = xs[0] - x0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = T::one();
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 = c2 * c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (T::from_count(k) * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - T::from_count(k) * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// First-derivative operator on a (nonuniform) grid using `width`-point
/// stencils (centered in the interior, one-sided near the ends).
#[derive(Clone, Debug)]
pub struct DiffOperator<T> {
    starts: Vec<usize>,
    weights: Vec<Vec<T>>,
}

impl<T: Real> DiffOperator<T> {
    pub fn new(z: &[T], width: usize) -> Result<Self> {
        let n = z.len();
        if n < width {
            return Err(Error::GridTooCoarse { points: n, required: width });
        }
        let mut starts = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for i in 0..n {
            let start = i.saturating_sub(width / 2).min(n - width);
            let w = fornberg(z[i], &z[start..start + width], 1).pop().expect("row");
            starts.push(start);
            weights.push(w);
        }
        Ok(Self { starts, weights })
    }

    pub fn apply(&self, f: &[T]) -> Vec<T> {
        self.starts
            .iter()
            .zip(&self.weights)
            .map(|(&s, w)| w.iter().zip(&f[s..s + w.len()]).fold(T::zero(), |acc, (a, b)| acc + *a * *b))
            .collect()
    }
}

/// Local cubic (4-point Lagrange) interpolation of samples `(z, f)` at `x`.
pub fn interp_cubic<T: Real>(z: &[T], f: &[T], x: T) -> T {
    let n = z.len();
    if n == 1 {
        return f[0];
    }
    let i = match z.binary_search_by(|v| v.partial_cmp(&x).unwrap_or(std::cmp::Ordering::Less)) {
        Ok(i) => return f[i],
        Err(i) => i,
    };
    let width = n.min(4);
    let start = i.saturating_sub(2).min(n - width);
    let mut acc = T::zero();
    for a in start..start + width {
        let mut l = T::one();
        for b in start..start + width {
            if a != b {
                l = l * (x - z[b]) / (z[a] - z[b]);
            }
        }
        acc = acc + l * f[a];
    }
    acc
}
