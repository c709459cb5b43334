//! Run configuration and its validation.

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::equilibrium::{build_equilibrium, EntropyLaw, EquilibriumProfile, GasParameters, Isentropic, LinearEntropy, TabulatedEntropy};
use crate::error::{Error, Result};
use crate::fixedpoint::{Branch, ModeSpec};
use crate::wavefield::{Direction, FieldKind};

/// Environment variable overriding every other choice of output directory.
pub const OUT_DIR_ENV: &str = "ATMOSC_OUT_DIR";
/// Output directory used when neither the configuration nor the environment sets one.
pub const DEFAULT_OUT_DIR: &str = "atmosc_out";

/// Ideal-gas parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GasConfig {
    pub gamma: f64,
    pub c_v: f64,
    pub g: f64,
}

impl Default for GasConfig {
    fn default() -> Self {
        Self { gamma: 1.4, c_v: 1.0, g: 1.0 }
    }
}

/// Entropy law `Σ(η)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EntropyConfig {
    /// `Σ ≡ s0`.
    Isentropic {
        #[serde(default)]
        s0: f64,
    },
    /// `Σ(η) = s0 − β η`.
    Linear {
        beta: f64,
        #[serde(default)]
        s0: f64,
    },
    /// Monotone cubic interpolation of `(η, Σ)` knots starting at `η = 0`.
    Table { eta: Vec<f64>, sigma: Vec<f64> },
}

impl Default for EntropyConfig {
    fn default() -> Self {
        EntropyConfig::Isentropic { s0: 0.0 }
    }
}

/// Vertical (`l = 0`) spectrum request.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct L0Stage {
    /// Number of modes.
    pub n: usize,
}

/// Gravity- or pressure-branch request.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchStage {
    pub l: f64,
    pub n_min: usize,
    pub n_max: usize,
    /// Largest admissible root parameter (`λ₀` for g, `μ₀` for p); defaulted when absent.
    #[serde(default)]
    pub parameter0: Option<f64>,
}

/// Dispersion-function scan request.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DispersionStage {
    pub l: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub grid: usize,
    /// Number of roots (from the smallest) whose mode functions are written.
    #[serde(default)]
    pub mode_functions: usize,
}

/// One term of a synthesized field: a dispersion root (1-based, increasing `λ`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthTerm {
    pub root: usize,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default = "default_direction")]
    pub direction: Direction,
}

fn one() -> f64 {
    1.0
}

fn default_direction() -> Direction {
    Direction::X
}

/// Wave-synthesis request (uses the dispersion stage's roots).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthStage {
    pub kind: FieldKind,
    pub epsilon: f64,
    pub t0: f64,
    pub t1: f64,
    pub nt: usize,
    pub nx: usize,
    #[serde(default = "default_nz")]
    pub nz: usize,
    pub terms: Vec<SynthTerm>,
}

fn default_nz() -> usize {
    21
}

/// Requested stages; the equilibrium stage always runs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stages {
    #[serde(default)]
    pub l0: Option<L0Stage>,
    #[serde(default)]
    pub g: Option<BranchStage>,
    #[serde(default)]
    pub p: Option<BranchStage>,
    #[serde(default)]
    pub dispersion: Option<DispersionStage>,
    #[serde(default)]
    pub synth: Option<SynthStage>,
}

/// Acceptance thresholds applied to stage results.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub hydrostatic: f64,
    pub fixed_point_residual: f64,
    pub cross_validation: f64,
    pub wave_residual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { hydrostatic: 1e-10, fixed_point_residual: 1e-8, cross_validation: 1e-5, wave_residual: 1e-4 }
    }
}

/// A batch run: background, horizontal periods, stages, output location.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub gas: GasConfig,
    pub entropy: EntropyConfig,
    pub z_plus: f64,
    pub x_plus: f64,
    pub y_plus: Option<f64>,
    pub stages: Stages,
    /// Output directory; overridden by `ATMOSC_OUT_DIR`.
    pub output_dir: Option<String>,
    pub tolerances: Tolerances,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            gas: GasConfig::default(),
            entropy: EntropyConfig::default(),
            z_plus: 1.0,
            x_plus: 1.0,
            y_plus: None,
            stages: Stages::default(),
            output_dir: None,
            tolerances: Tolerances::default(),
        }
    }
}

/// One validation finding, naming the offending field.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub field: String,
    pub message: String,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

fn diag(out: &mut Vec<Diagnostic>, field: impl Into<String>, message: impl Into<String>) {
    out.push(Diagnostic { field: field.into(), message: message.into() });
}

fn positive(out: &mut Vec<Diagnostic>, field: &str, v: f64) {
    if !(v.is_finite() && v > 0.0) {
        diag(out, field, format!("must be positive and finite (got {v})"));
    }
}

impl RunConfig {
    /// Parse a JSON document; syntax and schema errors become `ConfigInvalid`.
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::ConfigInvalid(vec![format!("json: {e}")]))
    }

    /// Read and parse a JSON file.
    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Pretty JSON (stable field order).
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 (hex) of the canonical JSON of the configuration without its
    /// output directory, so relocating the output leaves the hash unchanged.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = None;
        hash_json(&serde_json::to_value(&c).expect("config serializes"))
    }

    /// `ATMOSC_OUT_DIR`, else `output_dir`, else [`DEFAULT_OUT_DIR`].
    pub fn resolve_output_dir(&self) -> PathBuf {
        resolve_output_dir(self.output_dir.as_deref())
    }

    /// Gas parameters, checked.
    pub fn gas_parameters(&self) -> Result<GasParameters<f64>> {
        GasParameters::new(self.gas.gamma, self.gas.c_v, self.gas.g)
    }

    /// The entropy law.
    pub fn entropy_law(&self) -> Result<Arc<dyn EntropyLaw<f64>>> {
        Ok(match &self.entropy {
            EntropyConfig::Isentropic { s0 } => Arc::new(Isentropic::new(*s0)),
            EntropyConfig::Linear { beta, s0 } => Arc::new(LinearEntropy { s0: *s0, beta: *beta }),
            EntropyConfig::Table { eta, sigma } => Arc::new(TabulatedEntropy::new(eta.clone(), sigma.clone(), self.gas.c_v)?),
        })
    }

    /// Build the equilibrium profile.
    pub fn build_profile(&self) -> Result<Arc<EquilibriumProfile<f64>>> {
        Ok(Arc::new(build_equilibrium(self.gas_parameters()?, self.entropy_law()?, self.z_plus)?))
    }

    /// Mode specification for wavenumber `l` in the `x` direction.
    pub fn mode_spec(&self, l: f64, branch: Branch) -> Result<ModeSpec<f64>> {
        ModeSpec::new(l, self.x_plus, self.y_plus, branch)
    }

    /// Parse and validate in one step.
    pub fn load_valid(text: &str) -> Result<Self> {
        let c = Self::from_json(text)?;
        let d = validate(&c);
        if d.is_empty() {
            Ok(c)
        } else {
            Err(Error::ConfigInvalid(d.iter().map(|d| d.to_string()).collect()))
        }
    }
}

/// `ATMOSC_OUT_DIR`, else `preferred`, else [`DEFAULT_OUT_DIR`].
pub fn resolve_output_dir(preferred: Option<&str>) -> PathBuf {
    match std::env::var(OUT_DIR_ENV) {
        Ok(v) if !v.is_empty() => PathBuf::from(v),
        _ => PathBuf::from(preferred.unwrap_or(DEFAULT_OUT_DIR)),
    }
}

/// SHA-256 (hex) of the compact serialization of a JSON value (object keys sorted).
pub fn hash_json(v: &serde_json::Value) -> String {
    // serde_json's default map is ordered by key, so the serialization is canonical.
    let bytes = serde_json::to_vec(v).expect("json serializes");
    hex::encode(Sha256::digest(&bytes))
}

fn check_l(out: &mut Vec<Diagnostic>, field: &str, l: f64, x_plus: f64) {
    if !(l.is_finite() && l > 0.0) {
        diag(out, field, format!("must be positive and finite (got {l})"));
        return;
    }
    if x_plus.is_finite() && x_plus > 0.0 {
        if let Err(e) = ModeSpec::new(l, x_plus, None, Branch::G) {
            diag(out, field, format!("violates the period quantization l*x_plus/(2 pi) in Z: {e}"));
        }
    }
}

fn check_branch(out: &mut Vec<Diagnostic>, name: &str, b: &BranchStage, x_plus: f64) {
    check_l(out, &format!("stages.{name}.l"), b.l, x_plus);
    if b.n_min == 0 {
        diag(out, format!("stages.{name}.n_min"), "mode labels start at 1");
    }
    if b.n_max < b.n_min {
        diag(out, format!("stages.{name}.n_max"), format!("must be >= n_min ({})", b.n_min));
    }
    if let Some(p0) = b.parameter0 {
        positive(out, &format!("stages.{name}.parameter0"), p0);
    }
}

/// Field-level diagnostics; empty when the configuration is valid.  Pure.
pub fn validate(c: &RunConfig) -> Vec<Diagnostic> {
    let mut d = Vec::new();
    if !(c.gas.gamma.is_finite() && c.gas.gamma > 1.0) {
        diag(&mut d, "gas.gamma", format!("must exceed 1 (got {})", c.gas.gamma));
    }
    positive(&mut d, "gas.c_v", c.gas.c_v);
    positive(&mut d, "gas.g", c.gas.g);
    positive(&mut d, "z_plus", c.z_plus);
    positive(&mut d, "x_plus", c.x_plus);
    if let Some(y) = c.y_plus {
        positive(&mut d, "y_plus", y);
    }
    match &c.entropy {
        EntropyConfig::Isentropic { s0 } => {
            if !s0.is_finite() {
                diag(&mut d, "entropy.s0", "must be finite");
            }
        }
        EntropyConfig::Linear { beta, s0 } => {
            if !beta.is_finite() {
                diag(&mut d, "entropy.beta", "must be finite");
            }
            if !s0.is_finite() {
                diag(&mut d, "entropy.s0", "must be finite");
            }
        }
        EntropyConfig::Table { eta, sigma } => {
            if let Err(msgs) = TabulatedEntropy::validate(eta, sigma) {
                for m in msgs {
                    diag(&mut d, "entropy.eta", m);
                }
            }
        }
    }
    let t = &c.tolerances;
    for (name, v) in [
        ("tolerances.hydrostatic", t.hydrostatic),
        ("tolerances.fixed_point_residual", t.fixed_point_residual),
        ("tolerances.cross_validation", t.cross_validation),
        ("tolerances.wave_residual", t.wave_residual),
    ] {
        positive(&mut d, name, v);
    }
    if let Some(dir) = &c.output_dir {
        if dir.trim().is_empty() {
            diag(&mut d, "output_dir", "must not be empty");
        }
    }
    let s = &c.stages;
    if let Some(l0) = &s.l0 {
        if l0.n == 0 {
            diag(&mut d, "stages.l0.n", "must be at least 1");
        }
    }
    if let Some(g) = &s.g {
        check_branch(&mut d, "g", g, c.x_plus);
    }
    if let Some(p) = &s.p {
        check_branch(&mut d, "p", p, c.x_plus);
    }
    if let Some(ds) = &s.dispersion {
        check_l(&mut d, "stages.dispersion.l", ds.l, c.x_plus);
        positive(&mut d, "stages.dispersion.lambda_min", ds.lambda_min);
        if !(ds.lambda_max > ds.lambda_min) {
            diag(&mut d, "stages.dispersion.lambda_max", "must exceed lambda_min");
        }
        if ds.grid < crate::dispersion::MIN_GRID {
            diag(&mut d, "stages.dispersion.grid", format!("must be at least {}", crate::dispersion::MIN_GRID));
        }
    }
    if let Some(sy) = &s.synth {
        if s.dispersion.is_none() {
            diag(&mut d, "stages.synth", "requires the dispersion stage");
        }
        positive(&mut d, "stages.synth.epsilon", sy.epsilon);
        if !(sy.t0.is_finite() && sy.t1.is_finite() && sy.t1 >= sy.t0) {
            diag(&mut d, "stages.synth.t1", "must be finite and >= t0");
        }
        if sy.nt == 0 {
            diag(&mut d, "stages.synth.nt", "must be at least 1");
        }
        if sy.nx == 0 {
            diag(&mut d, "stages.synth.nx", "must be at least 1");
        }
        if sy.nz < 2 {
            diag(&mut d, "stages.synth.nz", "must be at least 2");
        }
        if sy.terms.is_empty() {
            diag(&mut d, "stages.synth.terms", "must name at least one root");
        }
        for (i, term) in sy.terms.iter().enumerate() {
            if term.root == 0 {
                diag(&mut d, format!("stages.synth.terms[{i}].root"), "roots are numbered from 1");
            }
            if !term.amplitude.is_finite() {
                diag(&mut d, format!("stages.synth.terms[{i}].amplitude"), "must be finite");
            }
            if term.direction == Direction::Y && c.y_plus.is_none() {
                diag(&mut d, format!("stages.synth.terms[{i}].direction"), "direction y requires y_plus");
            }
            if term.direction == Direction::Y {
                if let (Some(ds), Some(y)) = (&s.dispersion, c.y_plus) {
                    check_l(&mut d, &format!("stages.synth.terms[{i}].direction"), ds.l, y);
                }
            }
        }
    }
    d
}
