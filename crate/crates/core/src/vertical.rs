//! Purely vertical (`l = 0`) oscillations: `−(c²ρ w′)′ = λ ρ w`, `w(0) = 0`.

use std::sync::Arc;

use rayon::prelude::*;

use crate::equilibrium::EquilibriumProfile;
use crate::error::{Error, Result};
use crate::problems::vertical_problem;
use crate::real::Real;
use crate::slcore::{
    fd_eigensolve, liouville_transform, normal_inner, normal_residual, shoot_eigensolve, Eigenpair, MeshSpec, SchrodingerForm,
};

/// Relative agreement required between the shooting value and the oracle.
pub const CROSS_TOL: f64 = 1e-5;

/// One vertical mode: shooting eigenpair with the oracle cross-check.
#[derive(Clone, Debug)]
pub struct VerticalMode<T> {
    pub pair: Eigenpair<T>,
    /// Richardson-extrapolated finite-difference eigenvalue.
    pub oracle_value: T,
    /// `|λ_shoot − λ_oracle| / λ_oracle`.
    pub relative_gap: T,
    /// `relative_gap ≤ CROSS_TOL`.
    pub cross_validated: bool,
}

/// The vertical spectrum of a profile.
#[derive(Clone, Debug)]
pub struct VerticalSpectrum<T: Real> {
    pub profile_id: String,
    pub modes: Vec<VerticalMode<T>>,
    pub form: SchrodingerForm<T>,
}

impl<T: Real> VerticalSpectrum<T> {
    /// Eigenvalues `λ_n^{(0)}` (shooting).
    pub fn values(&self) -> Vec<T> {
        self.modes.iter().map(|m| m.pair.value).collect()
    }

    /// The eigenpairs.
    pub fn pairs(&self) -> Vec<Eigenpair<T>> {
        self.modes.iter().map(|m| m.pair.clone()).collect()
    }

    /// `∫ w_m w_n ρ dz`.
    pub fn inner(&self, m: usize, n: usize) -> Result<T> {
        let a = self.mode(m)?;
        let b = self.mode(n)?;
        let grid = self.form.grid(a.pair.v.len() - 1)?;
        Ok(normal_inner(&grid, &a.pair.v, &b.pair.v))
    }

    fn mode(&self, n: usize) -> Result<&VerticalMode<T>> {
        if n == 0 || n > self.modes.len() {
            return Err(Error::IndexOutOfRange { index: n, available: self.modes.len() });
        }
        Ok(&self.modes[n - 1])
    }
}

/// Samples of one vertical mode.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeFunction<T> {
    pub index: usize,
    pub lambda: T,
    pub z: Vec<T>,
    /// `w`, normalized by `∫ ρ w² dz = 1`, positive near `z₊`.
    pub w: Vec<T>,
    /// Liouville variable `W = (c²ρ²)^{1/4} w`.
    pub big_w: Vec<T>,
    /// Relative weighted residual of the equation.
    pub residual: T,
}

/// Vertical spectrum with `n_max` modes (shooting, cross-checked against the oracle).
pub fn vertical_spectrum<T: Real>(profile: Arc<EquilibriumProfile<T>>, n_max: usize) -> Result<VerticalSpectrum<T>> {
    let id = profile.id();
    let problem = vertical_problem(profile)?;
    let form = liouville_transform(&problem)?;
    if n_max == 0 {
        return Ok(VerticalSpectrum { profile_id: id, modes: Vec::new(), form });
    }
    let (shoot, oracle) = rayon::join(
        || shoot_eigensolve(&form, n_max, T::lit(1e-8)),
        || fd_eigensolve(&problem, n_max, MeshSpec { vectors: false, ..MeshSpec::new(1000, 2) }),
    );
    let (shoot, oracle) = (shoot?, oracle?);
    let modes = shoot
        .into_iter()
        .zip(oracle)
        .map(|(pair, o)| {
            let gap = (pair.value - o.value).abs() / o.value.abs();
            VerticalMode { oracle_value: o.value, relative_gap: gap, cross_validated: gap <= T::lit(CROSS_TOL), pair }
        })
        .collect();
    Ok(VerticalSpectrum { profile_id: id, modes, form })
}

/// Samples of mode `n` with its residual.
pub fn vertical_mode_function<T: Real>(spectrum: &VerticalSpectrum<T>, n: usize) -> Result<ModeFunction<T>> {
    let m = spectrum.mode(n)?;
    let residual = normal_residual(&spectrum.form, &m.pair.v, m.pair.value)?;
    Ok(ModeFunction {
        index: n,
        lambda: m.pair.value,
        z: m.pair.z.clone(),
        w: m.pair.w.clone(),
        big_w: m.pair.v.clone(),
        residual,
    })
}

/// All mode functions, computed in parallel.
pub fn vertical_mode_functions<T: Real>(spectrum: &VerticalSpectrum<T>) -> Result<Vec<ModeFunction<T>>> {
    (1..=spectrum.modes.len()).into_par_iter().map(|n| vertical_mode_function(spectrum, n)).collect()
}
