//! Admissibility checks and vacuum-contact fits on sampled profiles.

use super::profile::EquilibriumProfile;
use crate::error::{Error, Result};
use crate::grid::{fornberg, Grid};
use crate::real::Real;

/// Tabulated background (`z` increasing, all points strictly below `z₊`).
#[derive(Clone, Debug, PartialEq)]
pub struct ProfileTable<T> {
    pub z_plus: T,
    pub g: T,
    pub z: Vec<T>,
    pub rho: Vec<T>,
    pub p: Vec<T>,
    pub c2: Vec<T>,
}

impl<T: Real> ProfileTable<T> {
    /// Sample `profile` on a graded mesh with `n` intervals (the vacuum node itself is dropped).
    pub fn sample(profile: &EquilibriumProfile<T>, n: usize) -> Result<Self> {
        let grid = Grid::graded(profile.z_plus, n);
        let mut t = Self { z_plus: profile.z_plus, g: profile.params.g, z: vec![], rho: vec![], p: vec![], c2: vec![] };
        for &z in &grid.z[..grid.len() - 1] {
            let f = profile.eval(z)?;
            t.z.push(z);
            t.rho.push(f.rho);
            t.p.push(f.p);
            t.c2.push(f.c2);
        }
        Ok(t)
    }
}

/// One pass/fail entry of an admissibility report.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckEntry {
    pub name: &'static str,
    pub passed: bool,
    pub value: f64,
    pub detail: String,
}

/// Result of [`check_admissible`].
#[derive(Clone, Debug, PartialEq)]
pub struct AdmissibilityReport {
    pub entries: Vec<CheckEntry>,
    /// `sup |dP/dz + gρ| / max(gρ)` with `dP/dz` by 5-point finite differences.
    pub hydrostatic_residual: f64,
    pub nu_fit: Option<f64>,
    pub c_rho_fit: Option<f64>,
}

impl AdmissibilityReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }

    pub fn entry(&self, name: &str) -> Option<&CheckEntry> {
        self.entries.iter().find(|e| e.name == name)
    }
}

/// Hydrostatic residual tolerance (relative to `max gρ`).
pub const HYDROSTATIC_TOL: f64 = 1e-10;
/// Tolerance of the vacuum exponent fit.
pub const NU_FIT_TOL: f64 = 0.01;

/// Check admissibility of a built profile (samples it on a 2000-interval graded mesh).
///
/// The hydrostatic residual is certified with `dP/dz` from the automatic
/// (truncated power series) differentiation of the closed-form profile; the
/// 5-point finite-difference residual of the sampled table is reported as an
/// additional, grid-dependent entry `hydrostatic_fd` (tolerance 1e-6).
pub fn check_admissible<T: Real>(profile: &EquilibriumProfile<T>) -> AdmissibilityReport {
    match ProfileTable::sample(profile, 2000) {
        Ok(t) => {
            let mut rep = check_admissible_table(&t, profile.nu(), profile.c_rho);
            let fd = rep.hydrostatic_residual;
            let ad = hydrostatic_residual_series(profile, &t.z);
            for e in rep.entries.iter_mut() {
                if e.name == "hydrostatic" {
                    e.passed = ad.is_finite() && ad < HYDROSTATIC_TOL;
                    e.value = ad;
                    e.detail = format!("sup |dP/dz + g rho| / max(g rho) < {HYDROSTATIC_TOL:e} (series differentiation)");
                }
            }
            rep.entries.push(CheckEntry {
                name: "hydrostatic_fd",
                passed: fd.is_finite() && fd < 1e-6,
                value: fd,
                detail: "5-point finite-difference residual on the sampled table < 1e-6".into(),
            });
            rep.hydrostatic_residual = ad;
            rep
        }
        Err(e) => AdmissibilityReport {
            entries: vec![CheckEntry { name: "evaluation", passed: false, value: f64::NAN, detail: e.to_string() }],
            hydrostatic_residual: f64::NAN,
            nu_fit: None,
            c_rho_fit: None,
        },
    }
}

/// Check admissibility of tabulated data against the expected exponent `nu` and amplitude `c_rho`.
pub fn check_admissible_table<T: Real>(t: &ProfileTable<T>, nu: T, c_rho: T) -> AdmissibilityReport {
    let mut entries = Vec::new();
    let n = t.z.len();
    let positive = t.rho.iter().chain(&t.p).chain(&t.c2).all(|v| *v > T::zero());
    entries.push(CheckEntry {
        name: "positivity",
        passed: positive,
        value: t.rho.iter().fold(f64::INFINITY, |m, v| m.min(v.to_f64_lossy())),
        detail: "rho, p, c2 > 0 on [0, z_plus)".into(),
    });
    let mut worst = 0usize;
    let mut mono = true;
    for i in 1..n {
        if !(t.rho[i] < t.rho[i - 1]) {
            mono = false;
            worst = i;
            break;
        }
    }
    entries.push(CheckEntry {
        name: "monotonicity",
        passed: mono,
        value: if mono { 0.0 } else { t.z[worst].to_f64_lossy() },
        detail: if mono { "rho strictly decreasing".into() } else { format!("rho not decreasing at z = {}", t.z[worst]) },
    });
    let hyd = hydrostatic_residual(t);
    entries.push(CheckEntry {
        name: "hydrostatic",
        passed: hyd.is_finite() && hyd < HYDROSTATIC_TOL,
        value: hyd,
        detail: format!("sup |dP/dz + g rho| / max(g rho) < {HYDROSTATIC_TOL:e}"),
    });
    let (nu_fit, c_fit) = match fit_vacuum_exponents(&t.z, &t.rho, t.z_plus, nu) {
        Ok((a, b)) => (Some(a.to_f64_lossy()), Some(b.to_f64_lossy())),
        Err(_) => (None, None),
    };
    let fit_ok = match (nu_fit, c_fit) {
        (Some(a), Some(b)) => {
            (a - nu.to_f64_lossy()).abs() < NU_FIT_TOL && ((b - c_rho.to_f64_lossy()) / c_rho.to_f64_lossy()).abs() < 0.01
        }
        _ => false,
    };
    entries.push(CheckEntry {
        name: "vacuum_exponent",
        passed: fit_ok,
        value: nu_fit.unwrap_or(f64::NAN),
        detail: format!("|nu_fit - nu| < {NU_FIT_TOL}, C_rho within 1%"),
    });
    AdmissibilityReport { entries, hydrostatic_residual: hyd, nu_fit, c_rho_fit: c_fit }
}

/// `sup |dP/dz + gρ| / max(gρ)` over heights `z` with `dP/dz` from the local power series.
pub fn hydrostatic_residual_series<T: Real>(profile: &EquilibriumProfile<T>, z: &[T]) -> f64 {
    let mut worst = T::zero();
    let mut max_grho = T::zero();
    for &zz in z {
        match profile.local_series(zz, 1) {
            Ok(ls) => {
                let r = ls.rho.coeff(0);
                max_grho = max_grho.max(profile.params.g * r);
                worst = worst.max((ls.p.coeff(1) + profile.params.g * r).abs());
            }
            Err(_) => return f64::NAN,
        }
    }
    (worst / max_grho).to_f64_lossy()
}

/// `sup |dP/dz + gρ| / max(gρ)` with 5-point (nonuniform) finite differences of `P`.
pub fn hydrostatic_residual<T: Real>(t: &ProfileTable<T>) -> f64 {
    let n = t.z.len();
    if n < 5 {
        return f64::NAN;
    }
    let max_grho = t.rho.iter().fold(T::zero(), |m, v| m.max(*v)) * t.g;
    let mut worst = T::zero();
    for i in 0..n {
        let start = i.saturating_sub(2).min(n - 5);
        let w = fornberg(t.z[i], &t.z[start..start + 5], 1).pop().expect("row");
        let dp = (0..5).fold(T::zero(), |s, k| s + w[k] * t.p[start + k]);
        worst = worst.max((dp + t.g * t.rho[i]).abs());
    }
    (worst / max_grho).to_f64_lossy()
}

/// Log-log regression of `ρ` against depth `s = z₊ − z` over the decade
/// `s/z₊ ∈ [1e-4, 1e-3]`. Returns `(nu_fit, c_rho_fit)` where the amplitude is
/// the fitted line's `ρ/s^ν` at the smallest depth in the window.
pub fn fit_vacuum_exponents<T: Real>(z: &[T], rho: &[T], z_plus: T, nu: T) -> Result<(T, T)> {
    let lo = z_plus * T::lit(1e-4) * (T::one() - T::lit(1e-9));
    let hi = z_plus * T::lit(1e-3) * (T::one() + T::lit(1e-9));
    let pts: Vec<(T, T)> = z
        .iter()
        .zip(rho)
        .filter_map(|(&zz, &r)| {
            let s = z_plus - zz;
            (s >= lo && s <= hi && r > T::zero()).then(|| (s.ln(), r.ln()))
        })
        .collect();
    if pts.len() < 5 {
        return Err(Error::FitFailure(format!("only {} samples with depth in [1e-4, 1e-3] z_plus", pts.len())));
    }
    let smin = pts.iter().fold(T::infinity(), |m, p| m.min(p.0));
    let smax = pts.iter().fold(T::neg_infinity(), |m, p| m.max(p.0));
    if smax - smin < T::lit(3f64.ln()) {
        return Err(Error::FitFailure("near-vacuum samples span less than a factor 3 in depth".into()));
    }
    let m = T::from_count(pts.len());
    let mx = pts.iter().fold(T::zero(), |s, p| s + p.0) / m;
    let my = pts.iter().fold(T::zero(), |s, p| s + p.1) / m;
    let sxy = pts.iter().fold(T::zero(), |s, p| s + (p.0 - mx) * (p.1 - my));
    let sxx = pts.iter().fold(T::zero(), |s, p| s + (p.0 - mx) * (p.0 - mx));
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let c = (intercept + slope * smin - nu * smin).exp();
    Ok((slope, c))
}

/// Vacuum exponent fit of a built profile (40 log-spaced depths in the fit window).
pub fn vacuum_exponents<T: Real>(profile: &EquilibriumProfile<T>) -> Result<(T, T)> {
    let mut z = Vec::new();
    let mut rho = Vec::new();
    for i in 0..40 {
        let s = profile.z_plus * T::lit(10f64.powf(-4.0 + i as f64 / 39.0));
        let f = profile.eval_depth(s)?;
        z.push(profile.z_plus - s);
        rho.push(f.rho);
    }
    z.reverse();
    rho.reverse();
    fit_vacuum_exponents(&z, &rho, profile.z_plus, profile.nu())
}
