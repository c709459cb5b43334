//! Admissible stratified equilibria built from a prescribed entropy law.

mod admissible;
mod entropy;
mod profile;

pub use admissible::{
    check_admissible, check_admissible_table, fit_vacuum_exponents, hydrostatic_residual, hydrostatic_residual_series, vacuum_exponents,
    AdmissibilityReport, CheckEntry, ProfileTable, HYDROSTATIC_TOL, NU_FIT_TOL,
};
pub use entropy::{EntropyLaw, Isentropic, LinearEntropy, TabulatedEntropy};
pub use profile::{
    build_equilibrium, EquilibriumProfile, FieldSample, GasParameters, LocalSeries, VacuumSeries, VALIDATION_POINTS,
};

use crate::real::Real;
use std::sync::Arc;

/// The reference isentropic profile `γ = 1.4, c_v = 1, g = 1, Σ ≡ 0, z₊ = 1`.
pub fn reference_isentropic<T: Real>() -> EquilibriumProfile<T> {
    let p = GasParameters::new(T::lit(1.4), T::one(), T::one()).expect("valid");
    build_equilibrium(p, Arc::new(Isentropic::new(T::zero())), T::one()).expect("reference isentropic profile")
}

/// The reference stable profile `γ = 1.4, c_v = 1, g = 1, Σ(η) = −0.5 η, z₊ = 1`.
pub fn reference_stable<T: Real>() -> EquilibriumProfile<T> {
    let p = GasParameters::new(T::lit(1.4), T::one(), T::one()).expect("valid");
    build_equilibrium(p, Arc::new(LinearEntropy::new(T::lit(0.5))), T::one()).expect("reference stable profile")
}

#[cfg(test)]
mod tests;
