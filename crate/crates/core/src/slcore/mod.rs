//! Weighted Sturm–Liouville problems with one regular and one singular
//! (inverse-square after the Liouville transform) endpoint.
//!
//! * [`SLProblem`]: `−(a w′)′ + b w = Λ κ w` on `(0, L)`, Dirichlet or Robin at
//!   `z = 0`, regular-Dirichlet or singular at `z = L`.
//! * [`fd_eigensolve`]: graded-mesh finite-difference oracle with Richardson extrapolation.
//! * [`liouville_transform`] → [`SchrodingerForm`]: `−v″ + q v = Λ v`.
//! * [`shoot_eigensolve`]: Prüfer-angle shooting on the normal form.
//! * [`rayleigh_quotient`]: the quadratic form of the normal form.

mod fd;
mod liouville;
mod problem;
mod rayleigh;
mod shoot;


pub use fd::{discretize, fd_eigensolve, sign_changes, Discretization, MeshSpec};
pub use liouville::{liouville_transform, NormalGrid, NormalPoint, SchrodingerForm};
pub use problem::{CoeffJets, Coefficients, FnCoefficients, Jet, LeftBoundary, RightEnd, SLProblem, SingularExponents};
pub use rayleigh::{normal_inner, normal_residual, rayleigh_quotient};
pub use shoot::{shoot_eigensolve, shoot_with, ShootOptions};

use std::fmt;
use std::io::Write;

use crate::error::Result;
use crate::real::Real;

/// Which solver produced an eigenpair.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveMethod {
    Oracle,
    Shooting,
}

impl fmt::Display for SolveMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveMethod::Oracle => "oracle",
            SolveMethod::Shooting => "shooting",
        })
    }
}

/// Eigenvalue with its normalized eigenfunction and diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct Eigenpair<T> {
    /// Mode number `n ≥ 1`.
    pub index: usize,
    /// `Λ_n`.
    pub value: T,
    /// Sample heights.
    pub z: Vec<T>,
    /// Eigenfunction `w` in original variables, `∫ κ w² dz = 1`, positive next to the singular end.
    pub w: Vec<T>,
    /// Normal-form samples `v = (aκ)^{1/4} w` (shooting only; on `form.grid`).
    pub v: Vec<T>,
    /// Oracle: scaled discrete residual; shooting: Prüfer-angle mismatch at the root.
    pub residual: T,
    pub method: SolveMethod,
    /// Interior sign changes of the eigenfunction.
    pub zeros: usize,
    /// Estimated absolute eigenvalue error.
    pub error_estimate: T,
    /// Observed convergence order (oracle with ≥ 3 levels).
    pub order: Option<T>,
}

/// Write `n,lambda,residual,zeros` rows with 17 significant digits.
pub fn write_eigenpairs_csv<T: Real, W: Write>(out: W, pairs: &[Eigenpair<T>]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["n", "lambda", "residual", "zeros"]).map_err(csv_err)?;
    for p in pairs {
        wtr.write_record([
            p.index.to_string(),
            fmt_num(p.value),
            fmt_num(p.residual),
            p.zeros.to_string(),
        ])
        .map_err(csv_err)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Write the two-column eigenfunction CSV `z,w`.
pub fn write_eigenfunction_csv<T: Real, W: Write>(out: W, pair: &Eigenpair<T>) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["z", "w"]).map_err(csv_err)?;
    for (z, w) in pair.z.iter().zip(&pair.w) {
        wtr.write_record([fmt_num(*z), fmt_num(*w)]).map_err(csv_err)?;
    }
    wtr.flush()?;
    Ok(())
}

pub(crate) fn csv_err(e: csv::Error) -> crate::Error {
    crate::Error::Io(e.to_string())
}

/// Scientific notation with 17 significant digits.
pub fn fmt_num<T: Real>(x: T) -> String {
    format!("{:.16e}", x.to_f64_lossy())
}
