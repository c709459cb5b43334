//! The three Sturm–Liouville problems posed on an equilibrium profile.
//!
//! * vertical (`l = 0`) modes: `−(c²ρ w′)′ = λ ρ w`;
//! * gravity branch at fixed `λ`: `−(η′/ρ)′ + (l² − λ/c²)η/ρ = Λ l²𝒩² η/ρ`;
//! * pressure branch at fixed `μ = 1/λ`: `−(η′/ρ)′ + l²(1 − μ𝒩²)η/ρ = Λ η/(c²ρ)`.
//!
//! In the last two, `η` is the Lagrangian pressure perturbation, and the
//! ground condition `w(0) = 0` becomes the Robin condition
//! `η′(0) = −(l²g/λ)η(0)` (gravity) or `η′(0) = −l²gμ η(0)` (pressure).

use std::sync::Arc;

use crate::equilibrium::EquilibriumProfile;
use crate::error::Result;
use crate::real::Real;
use crate::series::Series;
use crate::slcore::{CoeffJets, Coefficients, Jet, LeftBoundary, RightEnd, SLProblem, SingularExponents};

/// Ground boundary treatment for the gravity and pressure problems.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum GroundCondition {
    /// The physical condition `w(0) = 0` (Robin in `η`).
    #[default]
    Physical,
    /// `η(0) = 0`.
    Dirichlet,
}

/// Which problem the coefficients describe.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ProblemKind<T> {
    Vertical,
    Gravity { l: T, lambda: T },
    Pressure { l: T, mu: T },
}

/// Coefficients of one of the atmospheric problems on a profile.
#[derive(Clone)]
pub struct ProfileCoefficients<T: Real> {
    pub profile: Arc<EquilibriumProfile<T>>,
    pub kind: ProblemKind<T>,
}

fn jet<T: Real>(s: &Series<T>) -> Jet<T> {
    Jet::new(s.coeff(0), s.coeff(1), T::lit(2.0) * s.coeff(2))
}

impl<T: Real> Coefficients<T> for ProfileCoefficients<T> {
    fn values(&self, _z: T, s: T) -> Result<(T, T, T)> {
        let f = self.profile.eval_depth(s)?;
        Ok(match self.kind {
            ProblemKind::Vertical => (f.c2 * f.rho, T::zero(), f.rho),
            ProblemKind::Gravity { l, lambda } => {
                let l2 = l * l;
                (T::one() / f.rho, (l2 - lambda / f.c2) / f.rho, l2 * f.n2 / f.rho)
            }
            ProblemKind::Pressure { l, mu } => {
                let l2 = l * l;
                (T::one() / f.rho, l2 * (T::one() - mu * f.n2) / f.rho, T::one() / (f.c2 * f.rho))
            }
        })
    }

    fn jets(&self, _z: T, s: T) -> Result<CoeffJets<T>> {
        let ls = self.profile.local_series_depth(s, 2)?;
        let rho0 = ls.rho.coeff(0);
        let c20 = ls.c2.coeff(0);
        let n20 = ls.n2.coeff(0);
        Ok(match self.kind {
            ProblemKind::Vertical => CoeffJets { a: jet(&(&ls.c2 * &ls.rho)), b: T::zero(), kappa: jet(&ls.rho) },
            ProblemKind::Gravity { l, lambda } => {
                let l2 = l * l;
                let inv = ls.rho.recip();
                CoeffJets { a: jet(&inv), b: (l2 - lambda / c20) / rho0, kappa: jet(&(&inv * &ls.n2).scale(l2)) }
            }
            ProblemKind::Pressure { l, mu } => {
                let l2 = l * l;
                CoeffJets {
                    a: jet(&ls.rho.recip()),
                    b: l2 * (T::one() - mu * n20) / rho0,
                    kappa: jet(&(&ls.c2 * &ls.rho).recip()),
                }
            }
        })
    }
}

/// `−(c²ρ w′)′ = λ ρ w`, `w(0) = 0`, no condition at the vacuum end.
pub fn vertical_problem<T: Real>(profile: Arc<EquilibriumProfile<T>>) -> Result<SLProblem<T>> {
    let nu = profile.nu();
    let right = RightEnd::Singular(SingularExponents { a_power: nu + T::one(), b_power: nu + T::one(), kappa_power: nu });
    let z_plus = profile.z_plus;
    SLProblem::new(
        Arc::new(ProfileCoefficients { profile, kind: ProblemKind::Vertical }),
        z_plus,
        LeftBoundary::Dirichlet,
        right,
        "vertical",
    )
}

/// Gravity-branch problem at fixed `λ` (weight `l²𝒩²/ρ`).
pub fn gravity_problem<T: Real>(profile: Arc<EquilibriumProfile<T>>, l: T, lambda: T, ground: GroundCondition) -> Result<SLProblem<T>> {
    let nu = profile.nu();
    let g = profile.params.g;
    let left = match ground {
        GroundCondition::Physical if lambda != T::zero() => LeftBoundary::Robin { ratio: -l * l * g / lambda },
        _ => LeftBoundary::Dirichlet,
    };
    let right = RightEnd::Singular(SingularExponents { a_power: -nu, b_power: -nu - T::one(), kappa_power: -nu });
    let z_plus = profile.z_plus;
    SLProblem::new(Arc::new(ProfileCoefficients { profile, kind: ProblemKind::Gravity { l, lambda } }), z_plus, left, right, "gravity")
}

/// Pressure-branch problem at fixed `μ` (weight `1/(c²ρ)`).
pub fn pressure_problem<T: Real>(profile: Arc<EquilibriumProfile<T>>, l: T, mu: T, ground: GroundCondition) -> Result<SLProblem<T>> {
    let nu = profile.nu();
    let g = profile.params.g;
    let left = match ground {
        GroundCondition::Physical => LeftBoundary::Robin { ratio: -l * l * g * mu },
        GroundCondition::Dirichlet => LeftBoundary::Dirichlet,
    };
    let right = RightEnd::Singular(SingularExponents { a_power: -nu, b_power: -nu, kappa_power: -nu - T::one() });
    let z_plus = profile.z_plus;
    SLProblem::new(Arc::new(ProfileCoefficients { profile, kind: ProblemKind::Pressure { l, mu } }), z_plus, left, right, "pressure")
}
