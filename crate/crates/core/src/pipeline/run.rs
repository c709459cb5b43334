//! Staged execution of a [`RunConfig`] and the resulting manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::config::{validate, BranchStage, RunConfig, SynthStage};
use super::io::{render, write_file, write_fixed_point_csv, write_profile_csv, write_roots_csv, FileRecord};
use crate::dispersion::{reconstruct_eigenfunction, scan_and_refine, write_mode_function_csv, DispersionScan, ModeFunction};
use crate::equilibrium::{check_admissible, EquilibriumProfile};
use crate::error::{Error, Result};
use crate::fixedpoint::{default_lambda0, default_mu0, solve_gmodes, solve_pmodes, Branch, FixedPointResult, SpectrumOptions};
use crate::slcore::write_eigenpairs_csv;
use crate::vertical::vertical_spectrum;
use crate::wavefield::{boundary_motion, synthesize_field, wave_residual, write_snapshot_csv, FieldMode};

/// Intervals of the written profile table.
pub const PROFILE_TABLE_INTERVALS: usize = 400;

/// Outcome of one stage.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageStatus {
    /// Completed and every check passed.
    Ok,
    /// Completed but a check exceeded its tolerance.
    Failed,
    /// Raised an error.
    Error,
    /// Not run because a prerequisite stage did not complete.
    Skipped,
}

/// A named quantity compared with its threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

/// Report of one stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub name: String,
    pub status: StageStatus,
    pub message: Option<String>,
    pub metrics: BTreeMap<String, f64>,
    pub checks: Vec<CheckRecord>,
    pub files: Vec<String>,
}

impl StageReport {
    fn new(name: &str) -> Self {
        Self { name: name.into(), status: StageStatus::Ok, message: None, metrics: BTreeMap::new(), checks: Vec::new(), files: Vec::new() }
    }

    fn check(&mut self, name: impl Into<String>, value: f64, threshold: f64) {
        let passed = value.is_finite() && value < threshold;
        if !passed && self.status == StageStatus::Ok {
            self.status = StageStatus::Failed;
        }
        self.checks.push(CheckRecord { name: name.into(), value, threshold, passed });
    }

    fn fail(&mut self, e: &Error) {
        self.status = StageStatus::Error;
        self.message = Some(e.to_string());
    }
}

/// One eigenvalue computed by two methods.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossPair {
    pub label: String,
    pub method_a: String,
    pub value_a: f64,
    pub method_b: String,
    pub value_b: f64,
    /// `|a − b| / |b|`.
    pub relative: f64,
}

/// Dual-method agreement over the whole run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossValidation {
    pub pairs: Vec<CrossPair>,
    /// Maximum of `relative` over `pairs` (0 when there are none).
    pub max_relative_disagreement: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Summary of a run: hash, per-stage status, files with checksums, cross-validation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub version: String,
    pub stages: Vec<StageReport>,
    pub files: Vec<FileRecord>,
    pub cross_validation: CrossValidation,
    /// No stage errored or failed a check, and cross-validation passed.
    pub success: bool,
}

impl RunManifest {
    pub fn stage(&self, name: &str) -> Option<&StageReport> {
        self.stages.iter().find(|s| s.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}

/// File name of the manifest inside the output directory.
pub const MANIFEST_FILE: &str = "manifest.json";

struct Runner<'a> {
    config: &'a RunConfig,
    dir: PathBuf,
    files: Vec<FileRecord>,
    pairs: Vec<CrossPair>,
    stages: Vec<StageReport>,
}

impl Runner<'_> {
    fn emit(&mut self, stage: &mut StageReport, name: &str, bytes: Vec<u8>) -> Result<()> {
        let rec = write_file(&self.dir, name, &bytes)?;
        stage.files.push(rec.path.clone());
        self.files.push(rec);
        Ok(())
    }

    fn finish(&mut self, stage: StageReport) {
        self.stages.push(stage);
    }

    fn skipped(&mut self, name: &str, why: &str) {
        let mut s = StageReport::new(name);
        s.status = StageStatus::Skipped;
        s.message = Some(why.into());
        self.stages.push(s);
    }
}

/// Execute the requested stages (equilibrium → spectra → dispersion → synthesis)
/// and write their files plus `manifest.json` into the resolved output directory.
///
/// Only an invalid configuration or an unwritable output directory is an
/// `Err`; stage errors are recorded in the manifest.
pub fn run(config: &RunConfig) -> Result<RunManifest> {
    run_in(config, &config.resolve_output_dir())
}

/// [`run`] with an explicit output directory.
pub fn run_in(config: &RunConfig, dir: &Path) -> Result<RunManifest> {
    let diags = validate(config);
    if !diags.is_empty() {
        return Err(Error::ConfigInvalid(diags.iter().map(|d| d.to_string()).collect()));
    }
    std::fs::create_dir_all(dir)?;
    let hash = config.hash();
    let mut r = Runner { config, dir: dir.to_path_buf(), files: Vec::new(), pairs: Vec::new(), stages: Vec::new() };

    let profile = stage_equilibrium(&mut r, &hash)?;
    let stages = &config.stages;
    let mut g_results = None;
    let mut p_results = None;
    let mut scan = None;
    match &profile {
        Some(profile) => {
            if let Some(l0) = &stages.l0 {
                stage_l0(&mut r, profile, l0.n)?;
            }
            if let Some(b) = &stages.g {
                g_results = stage_branch(&mut r, profile, b, Branch::G)?;
            }
            if let Some(b) = &stages.p {
                p_results = stage_branch(&mut r, profile, b, Branch::P)?;
            }
            if stages.dispersion.is_some() {
                scan = stage_dispersion(&mut r, profile, g_results.as_ref(), p_results.as_ref())?;
            }
            if let Some(sy) = &stages.synth {
                match &scan {
                    Some(s) => stage_synth(&mut r, profile, sy, s)?,
                    None => r.skipped("synth", "dispersion stage did not complete"),
                }
            }
        }
        None => {
            for (name, requested) in [
                ("l0", stages.l0.is_some()),
                ("g", stages.g.is_some()),
                ("p", stages.p.is_some()),
                ("dispersion", stages.dispersion.is_some()),
                ("synth", stages.synth.is_some()),
            ] {
                if requested {
                    r.skipped(name, "equilibrium stage did not complete");
                }
            }
        }
    }

    let tol = config.tolerances.cross_validation;
    let max = r.pairs.iter().map(|p| p.relative).fold(0.0f64, |a, b| if b.is_nan() || a.is_nan() { f64::NAN } else { a.max(b) });
    let cross = CrossValidation { pairs: std::mem::take(&mut r.pairs), max_relative_disagreement: max, tolerance: tol, passed: max.is_finite() && max < tol };
    let success = cross.passed && r.stages.iter().all(|s| matches!(s.status, StageStatus::Ok));
    let manifest = RunManifest {
        config_hash: hash,
        version: env!("CARGO_PKG_VERSION").to_string(),
        stages: std::mem::take(&mut r.stages),
        files: std::mem::take(&mut r.files),
        cross_validation: cross,
        success,
    };
    std::fs::write(dir.join(MANIFEST_FILE), manifest.to_json())?;
    Ok(manifest)
}

/// Equilibrium summary JSON body (shared with the `equilibrium` command).
pub fn equilibrium_summary(profile: &EquilibriumProfile<f64>, config_hash: &str) -> serde_json::Value {
    let rep = check_admissible(profile);
    let checks: Vec<serde_json::Value> = rep
        .entries
        .iter()
        .map(|e| serde_json::json!({"name": e.name, "passed": e.passed, "value": e.value, "detail": e.detail}))
        .collect();
    serde_json::json!({
        "config_hash": config_hash,
        "profile": profile.id(),
        "nu": profile.nu(),
        "c_rho": profile.c_rho,
        "hydrostatic_residual": rep.hydrostatic_residual,
        "nu_fit": rep.nu_fit,
        "c_rho_fit": rep.c_rho_fit,
        "admissible": rep.passed(),
        "checks": checks,
    })
}

fn stage_equilibrium(r: &mut Runner, hash: &str) -> Result<Option<Arc<EquilibriumProfile<f64>>>> {
    let mut st = StageReport::new("equilibrium");
    let profile = match r.config.build_profile() {
        Ok(p) => p,
        Err(e) => {
            st.fail(&e);
            r.finish(st);
            return Ok(None);
        }
    };
    let rep = check_admissible(&*profile);
    st.metrics.insert("hydrostatic_residual".into(), rep.hydrostatic_residual);
    st.metrics.insert("nu".into(), profile.nu());
    if let Some(nu) = rep.nu_fit {
        st.metrics.insert("nu_fit".into(), nu);
    }
    st.check("hydrostatic_residual", rep.hydrostatic_residual, r.config.tolerances.hydrostatic);
    for e in rep.entries.iter().filter(|e| e.name != "hydrostatic") {
        st.checks.push(CheckRecord { name: e.name.to_string(), value: e.value, threshold: f64::NAN, passed: e.passed });
        if !e.passed && st.status == StageStatus::Ok {
            st.status = StageStatus::Failed;
        }
    }
    let csv = render(|b| write_profile_csv(b, &*profile, PROFILE_TABLE_INTERVALS))?;
    r.emit(&mut st, "profile.csv", csv)?;
    let json = serde_json::to_vec_pretty(&equilibrium_summary(&profile, hash)).expect("json");
    r.emit(&mut st, "equilibrium.json", json)?;
    r.finish(st);
    Ok(Some(profile))
}

fn stage_l0(r: &mut Runner, profile: &Arc<EquilibriumProfile<f64>>, n: usize) -> Result<()> {
    let mut st = StageReport::new("l0");
    match vertical_spectrum(profile.clone(), n) {
        Ok(spec) => {
            for m in &spec.modes {
                r.pairs.push(CrossPair {
                    label: format!("l0 n={}", m.pair.index),
                    method_a: "shooting".into(),
                    value_a: m.pair.value,
                    method_b: "finite-difference".into(),
                    value_b: m.oracle_value,
                    relative: m.relative_gap,
                });
            }
            let gap = spec.modes.iter().map(|m| m.relative_gap).fold(0.0, f64::max);
            st.metrics.insert("modes".into(), spec.modes.len() as f64);
            st.check("max_relative_gap", gap, r.config.tolerances.cross_validation);
            let csv = render(|b| write_eigenpairs_csv(b, &spec.pairs()))?;
            r.emit(&mut st, "spectrum_l0.csv", csv)?;
        }
        Err(e) => st.fail(&e),
    }
    r.finish(st);
    Ok(())
}

type BranchResults = (f64, Vec<FixedPointResult<f64>>);

fn stage_branch(r: &mut Runner, profile: &Arc<EquilibriumProfile<f64>>, b: &BranchStage, branch: Branch) -> Result<Option<BranchResults>> {
    let name = match branch {
        Branch::G => "g",
        Branch::P => "p",
    };
    let mut st = StageReport::new(name);
    let outcome = (|| -> Result<Vec<Result<FixedPointResult<f64>>>> {
        let spec = r.config.mode_spec(b.l, branch)?;
        let opts = SpectrumOptions::default();
        match branch {
            Branch::G => {
                let l0 = b.parameter0.unwrap_or_else(|| default_lambda0(profile, &spec));
                solve_gmodes(profile, &spec, b.n_min..=b.n_max, l0, &opts)
            }
            Branch::P => {
                let m0 = match b.parameter0 {
                    Some(m) => m,
                    None => default_mu0(profile, &spec)?,
                };
                solve_pmodes(profile, &spec, b.n_min..=b.n_max, m0, &opts)
            }
        }
    })();
    let results = match outcome {
        Ok(v) => v,
        Err(e) => {
            st.fail(&e);
            r.finish(st);
            return Ok(None);
        }
    };
    let csv = render(|buf| write_fixed_point_csv(buf, &results))?;
    r.emit(&mut st, &format!("{name}modes.csv"), csv)?;
    let mut ok = Vec::new();
    let mut errors = Vec::new();
    for (k, res) in results.into_iter().enumerate() {
        match res {
            Ok(m) => ok.push(m),
            Err(e) => errors.push(format!("n={}: {e}", b.n_min + k)),
        }
    }
    let worst = ok.iter().map(|m| m.f_residual).fold(0.0, f64::max);
    st.metrics.insert("modes".into(), ok.len() as f64);
    st.check("max_f_residual", worst, r.config.tolerances.fixed_point_residual);
    if !errors.is_empty() {
        st.status = StageStatus::Error;
        st.message = Some(errors.join("; "));
    }
    r.finish(st);
    Ok(Some((b.l, ok)))
}

fn nearest(roots: &[f64], v: f64) -> Option<f64> {
    roots.iter().copied().min_by(|a, b| (a - v).abs().total_cmp(&(b - v).abs()))
}

fn stage_dispersion(
    r: &mut Runner,
    profile: &Arc<EquilibriumProfile<f64>>,
    g: Option<&BranchResults>,
    p: Option<&BranchResults>,
) -> Result<Option<(f64, DispersionScan<f64>, Vec<Option<ModeFunction<f64>>>)>> {
    let ds = r.config.stages.dispersion.clone().expect("requested");
    let mut st = StageReport::new("dispersion");
    let outcome = r.config.mode_spec(ds.l, Branch::G).and_then(|spec| Ok((spec, scan_and_refine(profile, &spec, (ds.lambda_min, ds.lambda_max), ds.grid)?)));
    let (spec, scan) = match outcome {
        Ok(v) => v,
        Err(e) => {
            st.fail(&e);
            r.finish(st);
            return Ok(None);
        }
    };
    let roots = scan.root_values();
    st.metrics.insert("roots".into(), roots.len() as f64);
    st.metrics.insert("skipped_points".into(), scan.skipped.len() as f64);
    let csv = render(|b| scan.write_csv(b))?;
    r.emit(&mut st, "dispersion.csv", csv)?;
    let csv = render(|b| write_roots_csv(b, &scan.roots))?;
    r.emit(&mut st, "dispersion_roots.csv", csv)?;

    // Every fixed-point eigenvalue with the same l inside the scanned range must be a root.
    for (label, set) in [("g", g), ("p", p)] {
        let Some((l, modes)) = set else { continue };
        if *l != ds.l {
            continue;
        }
        for m in modes.iter().filter(|m| m.lambda > ds.lambda_min && m.lambda < ds.lambda_max) {
            let relative = nearest(&roots, m.lambda).map_or(f64::INFINITY, |root| (m.lambda - root).abs() / root.abs());
            r.pairs.push(CrossPair {
                label: format!("{label} n={}", m.n),
                method_a: "fixed-point".into(),
                value_a: m.lambda,
                method_b: "dispersion".into(),
                value_b: nearest(&roots, m.lambda).unwrap_or(f64::NAN),
                relative,
            });
        }
    }

    let mut functions: Vec<Option<ModeFunction<f64>>> = vec![None; roots.len()];
    for (k, &lam) in roots.iter().enumerate().take(ds.mode_functions) {
        match reconstruct_eigenfunction(profile, &spec, lam) {
            Ok(m) => {
                st.metrics.insert(format!("mode_{}_residual", k + 1), m.residual);
                let csv = render(|b| write_mode_function_csv(b, &m))?;
                r.emit(&mut st, &format!("mode_{}.csv", k + 1), csv)?;
                functions[k] = Some(m);
            }
            Err(e) => {
                st.status = StageStatus::Error;
                st.message = Some(format!("root {}: {e}", k + 1));
            }
        }
    }
    r.finish(st);
    Ok(Some((ds.l, scan, functions)))
}

/// Uniform grid of `n` points on `[a, b]` (`a` alone when `n = 1`).
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![a];
    }
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}

/// `n` uniform points on the period `[0, p)`.
pub fn periodic_grid(p: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| p * k as f64 / n as f64).collect()
}

fn stage_synth(
    r: &mut Runner,
    profile: &Arc<EquilibriumProfile<f64>>,
    sy: &SynthStage,
    disp: &(f64, DispersionScan<f64>, Vec<Option<ModeFunction<f64>>>),
) -> Result<()> {
    let mut st = StageReport::new("synth");
    let (l, scan, functions) = disp;
    let outcome = (|| -> Result<_> {
        let spec = r.config.mode_spec(*l, Branch::G)?;
        let mut modes = Vec::new();
        for term in &sy.terms {
            let root = scan.roots.get(term.root - 1).ok_or(Error::IndexOutOfRange { index: term.root, available: scan.roots.len() })?;
            let mf = match functions.get(term.root - 1).cloned().flatten() {
                Some(m) => m,
                None => reconstruct_eigenfunction(profile, &spec, root.lambda)?,
            };
            modes.push(FieldMode::from_mode(term.direction, *l, term.amplitude, &mf)?);
        }
        let y_plus = r.config.y_plus.unwrap_or(r.config.x_plus);
        let field = synthesize_field(sy.kind, modes, r.config.x_plus, y_plus, profile.z_plus)?;
        let times = linspace(sy.t0, sy.t1, sy.nt);
        let xs = periodic_grid(r.config.x_plus, sy.nx);
        let surface = boundary_motion(&field, sy.epsilon, &times, &xs)?;
        let residual = wave_residual(&field, profile, &times)?;
        let zs = linspace(0.0, profile.z_plus, sy.nz);
        let boundary = render(|b| surface.write_csv(b))?;
        let snapshots = render(|b| write_snapshot_csv(b, &field, &times, &xs, &zs))?;
        Ok((residual, boundary, snapshots))
    })();
    match outcome {
        Ok((residual, boundary, snapshots)) => {
            st.metrics.insert("wave_residual".into(), residual);
            st.check("wave_residual", residual, r.config.tolerances.wave_residual);
            r.emit(&mut st, "boundary.csv", boundary)?;
            r.emit(&mut st, "snapshots.csv", snapshots)?;
        }
        Err(e) => st.fail(&e),
    }
    r.finish(st);
    Ok(())
}
