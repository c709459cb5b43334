//! Error type shared by all modules.

use thiserror::Error;

/// Errors reported by the spectral laboratory.  Numerical payloads are
/// converted to `f64` for reporting regardless of the scalar type in use.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("entropy positivity condition violated at eta = {eta:e} (gamma + (gamma-1)/c_v * eta * sigma'(eta) = {value:e})")]
    EntropyConditionViolated { eta: f64, value: f64 },
    #[error("inversion of the enthalpy-like map failed: {0}")]
    InversionFailure(String),
    #[error("height z = {z} outside the domain [0, {z_plus})")]
    OutOfDomain { z: f64, z_plus: f64 },
    #[error("vacuum exponent fit failed: {0}")]
    FitFailure(String),
    #[error("Liouville coordinate quadrature does not converge: {0}")]
    DivergentTransform(String),
    #[error("mesh too coarse for mode {index}: successive refinements {coarse:e} and {fine:e} disagree beyond tolerance {tol:e}")]
    MeshTooCoarse { index: usize, coarse: f64, fine: f64, tol: f64 },
    #[error("could not bracket mode {index}: {detail}")]
    BracketFailure { index: usize, detail: String },
    #[error("singular endpoint is limit-circle (cq = {cq} <= 3/4); shooting requires cq > 3/4")]
    LimitCircle { cq: f64 },
    #[error("trial function not admissible: {0}")]
    NonAdmissibleTrial(String),
    #[error("index {index} out of range (available: {available})")]
    IndexOutOfRange { index: usize, available: usize },
    #[error("stability assumption violated: N^2 = {n2:e} at z = {z} (floor {floor:e})")]
    StabilityViolated { z: f64, n2: f64, floor: f64 },
    #[error("parameter {name} = {value} out of range: {detail}")]
    ParameterOutOfRange { name: &'static str, value: f64, detail: String },
    #[error("no sign change for mode {n}: Lambda_n(param0) = {capital_lambda:e} <= 1/param0 = {threshold:e}")]
    NoSignChange { n: usize, capital_lambda: f64, threshold: f64 },
    #[error("spectral parameter lambda must be nonzero")]
    ZeroLambda,
    #[error("lambda = {lambda} is the excluded point l*g")]
    SkipPoint { lambda: f64 },
    #[error("integer polytropic index nu = {nu} requires a logarithmic resonance term that is not implemented")]
    ResonanceUnhandled { nu: f64 },
    #[error("ODE integration failed near t = {at}: {detail}")]
    StepFailure { at: f64, detail: String },
    #[error("regular and vacuum branches are not parallel at the matching point (sine of angle {sine:e})")]
    GlueMismatch { sine: f64 },
    #[error("grid too coarse: {points} points, at least {required} required")]
    GridTooCoarse { points: usize, required: usize },
    #[error("profile is not isentropic (max |A| = {max_abs_a:e})")]
    NotIsentropic { max_abs_a: f64 },
    #[error("lambda = {lambda} is within {distance:e} of an eigenvalue (condition estimate {condition:e})")]
    NearEigenvalue { lambda: f64, distance: f64, condition: f64 },
    #[error("wavenumber l = {l} incompatible with period {period}: l*period/(2 pi) = {ratio} is not an integer")]
    PeriodMismatch { l: f64, period: f64, ratio: f64 },
    #[error("boundary map not invertible: epsilon * l * |u(z+)| = {bound} >= 1/2")]
    NonInvertibleMap { bound: f64 },
    #[error("invalid configuration: {}", .0.join("; "))]
    ConfigInvalid(Vec<String>),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

/// Result alias used throughout the crate.
pub type Result<T, E = Error> = std::result::Result<T, E>;
