//! Spectral laboratory for stratified atmospheres touching vacuum at a finite height.
//!
//! The crate builds admissible equilibria from an entropy law
//! ([`equilibrium`]), solves weighted singular Sturm–Liouville problems by a
//! graded-mesh finite-difference oracle and by Liouville-transformed shooting
//! ([`slcore`]), computes vertical modes ([`vertical`]), gravity and pressure
//! modes as fixed points of parameterized eigenproblems ([`fixedpoint`]),
//! treats the first-order system with a Frobenius fundamental matrix at the
//! vacuum boundary ([`dispersion`]), and synthesizes wave fields
//! ([`wavefield`]).  [`pipeline`] ties everything to a JSON configuration.
//!
//! All numerical code is generic over [`Real`] (`f32`/`f64`); the aliases in
//! [`f64_api`] fix the scalar to `f64`.

pub mod error;
pub mod grid;
pub mod ode;
pub mod quad;
pub mod real;
pub mod roots;
pub mod series;
pub mod tridiag;

pub mod equilibrium;
pub mod dispersion;
pub mod fixedpoint;
pub mod problems;
pub mod slcore;
pub mod vertical;
pub mod wavefield;

pub mod f64_api;
pub mod pipeline;

pub use error::{Error, Result};
pub use real::Real;
