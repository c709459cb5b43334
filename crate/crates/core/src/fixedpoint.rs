//! Gravity and pressure modes as fixed points of parameterized Sturm–Liouville problems.
//!
//! Gravity branch: `Λ_k(λ)` are the eigenvalues of the problem at fixed
//! `λ ∈ [0, l·g)` (weight `l²𝒩²/ρ`); an eigenvalue `λ` of the full problem
//! solves `λ·Λ_k(λ) = 1`.  Pressure branch: the same with `μ = 1/λ` and weight
//! `1/(c²ρ)`.  Roots of `F(p) = p·Λ_k(p) − 1` are located on a log-spaced scan
//! and refined by Brent's method.
//!
//! Mode labels: with the physical ground condition the gravity problem has
//! negative eigenvalues (bound states of the Robin condition) for small `λ`.
//! The lowest of them turns positive just below `l·g` and there yields one
//! root, a surface mode outside the accumulating g-sequence (label 0, never
//! returned).  The physical label is `n = k − n₀ + 1` where
//! `n₀ = 1 + #{k : Λ_k(p_ref) < 0}`, `p_ref = min(p₀, ½·limit)`.

use std::sync::Arc;

use rayon::prelude::*;

use crate::equilibrium::EquilibriumProfile;
use crate::error::{Error, Result};
use crate::problems::{gravity_problem, pressure_problem, GroundCondition};
use crate::real::Real;
use crate::slcore::{fd_eigensolve, liouville_transform, shoot_eigensolve, Eigenpair, MeshSpec, SLProblem};

/// Floor below which `𝒩²` counts as violating the stability assumption.
pub const N2_FLOOR: f64 = 1e-10;
/// Number of scan points of the root search.
pub const SCAN_POINTS: usize = 64;

/// Gravity or pressure branch.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    G,
    P,
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Branch::G => "g",
            Branch::P => "p",
        })
    }
}

/// Horizontal structure of a mode: wavenumber `l` compatible with the period `x₊`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeSpec<T> {
    pub l: T,
    pub x_plus: T,
    pub y_plus: Option<T>,
    pub branch: Branch,
}

impl<T: Real> ModeSpec<T> {
    /// Validates `l > 0` and `l·x₊/(2π) ∈ ℤ` within `1e−12`.
    pub fn new(l: T, x_plus: T, y_plus: Option<T>, branch: Branch) -> Result<Self> {
        if !(l > T::zero()) || !l.is_finite() {
            return Err(Error::ParameterOutOfRange { name: "l", value: l.to_f64_lossy(), detail: "must be positive".into() });
        }
        if !(x_plus > T::zero()) {
            return Err(Error::ParameterOutOfRange { name: "x_plus", value: x_plus.to_f64_lossy(), detail: "must be positive".into() });
        }
        let ratio = l * x_plus / (T::lit(2.0) * T::PI());
        let tol = T::floor_tol(T::lit(1e-12)) * ratio.abs().max(T::one());
        if (ratio - ratio.round()).abs() > tol || ratio.round() < T::one() {
            return Err(Error::PeriodMismatch { l: l.to_f64_lossy(), period: x_plus.to_f64_lossy(), ratio: ratio.to_f64_lossy() });
        }
        Ok(Self { l, x_plus, y_plus, branch })
    }

    /// `l = 2πk/x₊`.
    pub fn harmonic(k: usize, x_plus: T, branch: Branch) -> Result<Self> {
        Self::new(T::lit(2.0) * T::PI() * T::from_count(k) / x_plus, x_plus, None, branch)
    }
}

/// Which solver evaluates `Λ_k(p)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SpectrumMethod {
    /// Finite-difference oracle with Richardson extrapolation.
    #[default]
    Oracle,
    /// Liouville transform and shooting.
    Shooting,
}

/// Options of the parameterized spectra.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectrumOptions<T> {
    pub ground: GroundCondition,
    pub method: SpectrumMethod,
    pub mesh: MeshSpec<T>,
}

impl<T: Real> Default for SpectrumOptions<T> {
    fn default() -> Self {
        // Bound states of the Robin condition are not mesh-converged and are not
        // used, so the refinement check is relaxed.
        Self {
            ground: GroundCondition::Physical,
            method: SpectrumMethod::Oracle,
            mesh: MeshSpec { cells: 1000, levels: 2, tol: T::lit(10.0), vectors: false },
        }
    }
}

impl<T: Real> SpectrumOptions<T> {
    pub fn with_ground(ground: GroundCondition) -> Self {
        Self { ground, ..Self::default() }
    }
}

/// Outcome of one fixed-point search.
#[derive(Clone, Debug, PartialEq)]
pub struct FixedPointResult<T> {
    /// Physical mode label.
    pub n: usize,
    /// Index `k` of `Λ_k` used.
    pub raw_index: usize,
    pub branch: Branch,
    /// The eigenvalue `λ` (for p-modes `1/μ`).
    pub lambda: T,
    /// The root parameter (`λ` for g, `μ` for p).
    pub parameter: T,
    /// `Λ_k` at the root.
    pub capital_lambda: T,
    /// Final bracket of the root parameter.
    pub bracket: (T, T),
    /// `|p·Λ_k(p) − 1|`.
    pub f_residual: T,
    /// Number of roots found on the scan.
    pub multiplicity_note: usize,
    /// All roots found (parameter values, increasing).
    pub all_roots: Vec<T>,
}

/// Sampled `Λ_k(p)` curves.
#[derive(Clone, Debug, PartialEq)]
pub struct ParameterSweep<T> {
    pub branch: Branch,
    pub parameter_grid: Vec<T>,
    /// `spectra[i][k]` = `Λ_{k+1}(grid[i])`.
    pub spectra: Vec<Vec<T>>,
    /// Max of `|ΔΛ_k/Δp|` over consecutive grid points and `k`.
    pub lipschitz_estimate: T,
}

fn check_stability<T: Real>(profile: &EquilibriumProfile<T>) -> Result<()> {
    let (n2, z) = profile.n2_min(512)?;
    if !(n2 > T::lit(N2_FLOOR)) {
        return Err(Error::StabilityViolated { z: z.to_f64_lossy(), n2: n2.to_f64_lossy(), floor: N2_FLOOR });
    }
    Ok(())
}

/// Largest admissible gravity parameter (exclusive): `l·g`.
pub fn lambda_limit<T: Real>(profile: &EquilibriumProfile<T>, spec: &ModeSpec<T>) -> T {
    spec.l * profile.params.g
}

/// Fraction of the branch limit at which negative `Λ_k` are counted for labels.
pub const LABEL_REFERENCE: f64 = 0.5;

/// Branch limit of the root parameter: `l·g` for `λ` (g), `1/(l·g)` for `μ` (p).
pub fn parameter_limit<T: Real>(profile: &EquilibriumProfile<T>, spec: &ModeSpec<T>) -> T {
    match spec.branch {
        Branch::G => lambda_limit(profile, spec),
        Branch::P => T::one() / lambda_limit(profile, spec),
    }
}

/// Default `λ₀ = 0.9·l·g`.
pub fn default_lambda0<T: Real>(profile: &EquilibriumProfile<T>, spec: &ModeSpec<T>) -> T {
    T::lit(0.9) * lambda_limit(profile, spec)
}

/// `M = max l²c²𝒩²` (Lipschitz constant of `μ ↦ Λ_k(μ)`).
pub fn p_lipschitz_bound<T: Real>(profile: &EquilibriumProfile<T>, spec: &ModeSpec<T>) -> Result<T> {
    profile.max_l2c2n2(spec.l, 2048)
}

/// Default `μ₀ = 0.9/(l·g)`, reduced by factors 0.9 until `1/μ₀ − Mμ₀ > 0`.
pub fn default_mu0<T: Real>(profile: &EquilibriumProfile<T>, spec: &ModeSpec<T>) -> Result<T> {
    let m = p_lipschitz_bound(profile, spec)?;
    let mut mu0 = T::lit(0.9) / lambda_limit(profile, spec);
    while T::one() / mu0 - m * mu0 <= T::zero() {
        mu0 = mu0 * T::lit(0.9);
    }
    Ok(mu0)
}

/// The gravity problem at fixed `λ`.
pub fn g_problem<T: Real>(profile: &Arc<EquilibriumProfile<T>>, spec: &ModeSpec<T>, lambda: T, ground: GroundCondition) -> Result<SLProblem<T>> {
    let lim = lambda_limit(profile, spec);
    if !(lambda >= T::zero() && lambda < lim) {
        return Err(Error::ParameterOutOfRange {
            name: "lambda",
            value: lambda.to_f64_lossy(),
            detail: format!("gravity branch requires 0 <= lambda < l*g = {}", lim.to_f64_lossy()),
        });
    }
    gravity_problem(profile.clone(), spec.l, lambda, ground)
}

/// The pressure problem at fixed `μ`.
pub fn p_problem<T: Real>(profile: &Arc<EquilibriumProfile<T>>, spec: &ModeSpec<T>, mu: T, ground: GroundCondition) -> Result<SLProblem<T>> {
    let lim = T::one() / lambda_limit(profile, spec);
    if !(mu >= T::zero() && mu < lim) {
        return Err(Error::ParameterOutOfRange {
            name: "mu",
            value: mu.to_f64_lossy(),
            detail: format!("pressure branch requires 0 <= mu < 1/(l*g) = {}", lim.to_f64_lossy()),
        });
    }
    pressure_problem(profile.clone(), spec.l, mu, ground)
}

fn eigenpairs<T: Real>(p: &SLProblem<T>, n_max: usize, opts: &SpectrumOptions<T>) -> Result<Vec<Eigenpair<T>>> {
    match opts.method {
        SpectrumMethod::Oracle => fd_eigensolve(p, n_max, opts.mesh),
        SpectrumMethod::Shooting => shoot_eigensolve(&liouville_transform(p)?, n_max, T::lit(1e-8)),
    }
}

fn values<T: Real>(p: &SLProblem<T>, n_max: usize, opts: &SpectrumOptions<T>) -> Result<Vec<T>> {
    Ok(eigenpairs(p, n_max, opts)?.into_iter().map(|e| e.value).collect())
}

/// The `n_max` smallest `Λ_k(λ)` of the gravity problem.
pub fn g_weighted_spectrum<T: Real>(
    profile: &Arc<EquilibriumProfile<T>>,
    spec: &ModeSpec<T>,
    lambda: T,
    n_max: usize,
    opts: &SpectrumOptions<T>,
) -> Result<Vec<T>> {
    check_stability(profile)?;
    values(&g_problem(profile, spec, lambda, opts.ground)?, n_max, opts)
}

/// The `n_max` smallest `Λ_k(μ)` of the pressure problem.
pub fn p_weighted_spectrum<T: Real>(
    profile: &Arc<EquilibriumProfile<T>>,
    spec: &ModeSpec<T>,
    mu: T,
    n_max: usize,
    opts: &SpectrumOptions<T>,
) -> Result<Vec<T>> {
    values(&p_problem(profile, spec, mu, opts.ground)?, n_max, opts)
}

/// Eigenpairs (with eigenfunctions `η`) of the branch problem at parameter `p`.
pub fn branch_eigenpairs<T: Real>(
    profile: &Arc<EquilibriumProfile<T>>,
    spec: &ModeSpec<T>,
    parameter: T,
    n_max: usize,
    opts: &SpectrumOptions<T>,
) -> Result<Vec<Eigenpair<T>>> {
    let p = match spec.branch {
        Branch::G => {
            check_stability(profile)?;
            g_problem(profile, spec, parameter, opts.ground)?
        }
        Branch::P => p_problem(profile, spec, parameter, opts.ground)?,
    };
    eigenpairs(&p, n_max, opts)
}

fn branch_values<T: Real>(
    profile: &Arc<EquilibriumProfile<T>>,
    spec: &ModeSpec<T>,
    parameter: T,
    n_max: usize,
    opts: &SpectrumOptions<T>,
) -> Result<Vec<T>> {
    match spec.branch {
        Branch::G => values(&g_problem(profile, spec, parameter, opts.ground)?, n_max, opts),
        Branch::P => values(&p_problem(profile, spec, parameter, opts.ground)?, n_max, opts),
    }
}

/// `n₀ = 1 + #{k : Λ_k(p₀) < 0}` together with the spectrum at `p₀` (`k_max` values).
pub fn label_shift<T: Real>(
    profile: &Arc<EquilibriumProfile<T>>,
    spec: &ModeSpec<T>,
    p0: T,
    k_max: usize,
    opts: &SpectrumOptions<T>,
) -> Result<(usize, Vec<T>)> {
    let vals = branch_values(profile, spec, p0, k_max, opts)?;
    let neg = vals.iter().filter(|v| **v < T::zero()).count();
    Ok((1 + neg, vals))
}

/// Log-spaced scan grid on `[10⁻⁵p₀, p₀]`.
fn scan_grid<T: Real>(p0: T) -> Vec<T> {
    let p_min = p0 * T::lit(1e-5);
    let ratio = (p0 / p_min).ln() / T::from_count(SCAN_POINTS - 1);
    (0..SCAN_POINTS).map(|i| if i + 1 == SCAN_POINTS { p0 } else { p_min * (ratio * T::from_count(i)).exp() }).collect()
}

/// Root search for `p·Λ_k(p) = 1` on `(0, p0]` for one raw index `k`, given
/// `Λ_k` on the scan grid.
#[allow(clippy::too_many_arguments)]
fn solve_index<T: Real>(
    profile: &Arc<EquilibriumProfile<T>>,
    spec: &ModeSpec<T>,
    k: usize,
    n: usize,
    grid: &[T],
    scan: &[T],
    opts: &SpectrumOptions<T>,
) -> Result<FixedPointResult<T>> {
    let p0 = *grid.last().expect("non-empty scan");
    let lambda_k_at_p0 = *scan.last().expect("non-empty scan");
    let threshold = T::one() / p0;
    if !(lambda_k_at_p0 > threshold) {
        return Err(Error::NoSignChange { n, capital_lambda: lambda_k_at_p0.to_f64_lossy(), threshold: threshold.to_f64_lossy() });
    }
    let f = |p: T| -> Result<T> { Ok(p * branch_values(profile, spec, p, k, opts)?[k - 1] - T::one()) };
    let fs: Vec<T> = grid.iter().zip(scan).map(|(p, c)| *p * *c - T::one()).collect();
    if !(fs[0] < T::zero()) {
        return Err(Error::BracketFailure { index: n, detail: format!("F(p_min) = {} is not negative", fs[0].to_f64_lossy()) });
    }
    let brackets: Vec<(T, T, T, T)> =
        (0..grid.len() - 1).filter(|&i| (fs[i] < T::zero()) != (fs[i + 1] < T::zero())).map(|i| (grid[i], grid[i + 1], fs[i], fs[i + 1])).collect();
    let roots = brackets
        .par_iter()
        .map(|&(a, b, fa, fb)| {
            let err = std::cell::Cell::new(None);
            let r = crate::roots::brent_with_values(
                |p| match f(p) {
                    Ok(v) => v,
                    Err(e) => {
                        err.set(Some(e));
                        T::nan()
                    }
                },
                a,
                b,
                fa,
                fb,
                T::floor_tol(T::lit(1e-12)) * p0.min(T::one()),
                T::zero(),
                200,
            );
            if let Some(e) = err.take() {
                return Err(e);
            }
            r
        })
        .collect::<Result<Vec<_>>>()?;
    // g: the smallest λ; p: the largest λ = 1/μ, i.e. the smallest μ.  Both are the first root.
    let chosen = roots[0];
    let root = chosen.root;
    let cap = branch_values(profile, spec, root, k, opts)?[k - 1];
    let lambda = match spec.branch {
        Branch::G => root,
        Branch::P => T::one() / root,
    };
    Ok(FixedPointResult {
        n,
        raw_index: k,
        branch: spec.branch,
        lambda,
        parameter: root,
        capital_lambda: cap,
        bracket: (chosen.lo, chosen.hi),
        f_residual: (root * cap - T::one()).abs(),
        multiplicity_note: roots.len(),
        all_roots: roots.iter().map(|r| r.root).collect(),
    })
}

fn solve_branch<T: Real>(
    profile: &Arc<EquilibriumProfile<T>>,
    spec: &ModeSpec<T>,
    n_range: std::ops::RangeInclusive<usize>,
    p0: T,
    opts: &SpectrumOptions<T>,
) -> Result<Vec<Result<FixedPointResult<T>>>> {
    let n_hi = *n_range.end();
    if n_range.is_empty() || *n_range.start() == 0 {
        return Ok(Vec::new());
    }
    // Enough indices to see the negative ones plus the requested labels.  The
    // negatives are counted at a reference parameter no larger than half the
    // branch limit, so labels do not depend on p₀: near `l·g` the bound-state
    // branch turns positive and has a fixed point of its own (label 0).
    let p_ref = p0.min(T::lit(LABEL_REFERENCE) * parameter_limit(profile, spec));
    let mut k_max = n_hi + 4;
    let (mut n0, _) = label_shift(profile, spec, p_ref, k_max, opts)?;
    while n0 + n_hi - 1 > k_max {
        k_max = n0 + n_hi + 4;
        n0 = label_shift(profile, spec, p_ref, k_max, opts)?.0;
    }
    let k_hi = n_hi + n0 - 1;
    let grid = scan_grid(p0);
    let scan = grid.par_iter().map(|&p| branch_values(profile, spec, p, k_hi, opts)).collect::<Result<Vec<_>>>()?;
    let ns: Vec<usize> = n_range.collect();
    Ok(ns
        .par_iter()
        .map(|&n| {
            let k = n + n0 - 1;
            let column: Vec<T> = scan.iter().map(|s| s[k - 1]).collect();
            solve_index(profile, spec, k, n, &grid, &column, opts)
        })
        .collect())
}

/// Gravity modes `λ_{−n}`, `n ∈ n_range`, with roots in `(0, λ₀]`.
pub fn solve_gmodes<T: Real>(
    profile: &Arc<EquilibriumProfile<T>>,
    spec: &ModeSpec<T>,
    n_range: std::ops::RangeInclusive<usize>,
    lambda0: T,
    opts: &SpectrumOptions<T>,
) -> Result<Vec<Result<FixedPointResult<T>>>> {
    check_stability(profile)?;
    let spec = ModeSpec { branch: Branch::G, ..*spec };
    g_problem(profile, &spec, lambda0, opts.ground)?;
    if !(lambda0 > T::zero()) {
        return Err(Error::ParameterOutOfRange { name: "lambda0", value: lambda0.to_f64_lossy(), detail: "must be positive".into() });
    }
    solve_branch(profile, &spec, n_range, lambda0, opts)
}

/// Pressure modes `λ_n = 1/μ_n`, `n ∈ n_range`, with `μ_n ∈ (0, μ₀]`.
pub fn solve_pmodes<T: Real>(
    profile: &Arc<EquilibriumProfile<T>>,
    spec: &ModeSpec<T>,
    n_range: std::ops::RangeInclusive<usize>,
    mu0: T,
    opts: &SpectrumOptions<T>,
) -> Result<Vec<Result<FixedPointResult<T>>>> {
    let spec = ModeSpec { branch: Branch::P, ..*spec };
    p_problem(profile, &spec, mu0, opts.ground)?;
    if !(mu0 > T::zero()) {
        return Err(Error::ParameterOutOfRange { name: "mu0", value: mu0.to_f64_lossy(), detail: "must be positive".into() });
    }
    let m = p_lipschitz_bound(profile, &spec)?;
    if T::one() / mu0 - m * mu0 <= T::zero() {
        return Err(Error::ParameterOutOfRange {
            name: "mu0",
            value: mu0.to_f64_lossy(),
            detail: format!("need 1/mu0 - M*mu0 > 0 with M = {}", m.to_f64_lossy()),
        });
    }
    solve_branch(profile, &spec, n_range, mu0, opts)
}

/// `Λ_k(p)` for `k ≤ n_max` on a parameter grid.
pub fn parameter_sweep<T: Real>(
    profile: &Arc<EquilibriumProfile<T>>,
    spec: &ModeSpec<T>,
    grid: &[T],
    n_max: usize,
    opts: &SpectrumOptions<T>,
) -> Result<ParameterSweep<T>> {
    if spec.branch == Branch::G {
        check_stability(profile)?;
    }
    let spectra = grid.par_iter().map(|&p| branch_values(profile, spec, p, n_max, opts)).collect::<Result<Vec<_>>>()?;
    for (p, s) in grid.iter().zip(&spectra) {
        if s.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput(format!("eigenvalue ordering violated at parameter {}", p.to_f64_lossy())));
        }
    }
    let mut lip = T::zero();
    for i in 1..grid.len() {
        let dp = (grid[i] - grid[i - 1]).abs();
        if dp == T::zero() {
            continue;
        }
        for k in 0..n_max {
            lip = lip.max((spectra[i][k] - spectra[i - 1][k]).abs() / dp);
        }
    }
    Ok(ParameterSweep { branch: spec.branch, parameter_grid: grid.to_vec(), spectra, lipschitz_estimate: lip })
}

#[cfg(test)]
mod tests;
