//! CSV writers/readers shared by the run pipeline and the command-line front end.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dispersion::DispersionRoot;
use crate::equilibrium::{EquilibriumProfile, ProfileTable};
use crate::error::{Error, Result};
use crate::fixedpoint::{Branch, FixedPointResult};
use crate::real::Real;
use crate::slcore::{csv_err, fmt_num};
use crate::wavefield::{Direction, FieldMode};

/// A produced file with its checksum.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRecord {
    /// Path relative to the output directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Write `bytes` to `dir/name` and return its record.
pub fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<FileRecord> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), bytes)?;
    Ok(FileRecord { path: name.to_string(), sha256: hex::encode(Sha256::digest(bytes)), bytes: bytes.len() as u64 })
}

/// Render a CSV produced by `f` into memory.
pub fn render<F: FnOnce(&mut Vec<u8>) -> Result<()>>(f: F) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

/// Profile CSV `z,rho,p,c2,n2,entropy` on a graded mesh with `n` intervals (vacuum node excluded).
pub fn write_profile_csv<T: Real, W: Write>(out: W, profile: &EquilibriumProfile<T>, n: usize) -> Result<()> {
    let table = ProfileTable::sample(profile, n)?;
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["z", "rho", "p", "c2", "n2", "entropy"]).map_err(csv_err)?;
    for &z in &table.z {
        let f = profile.eval(z)?;
        wtr.write_record([fmt_num(z), fmt_num(f.rho), fmt_num(f.p), fmt_num(f.c2), fmt_num(f.n2), fmt_num(f.s)]).map_err(csv_err)?;
    }
    wtr.flush()?;
    Ok(())
}

fn branch_name(b: Branch) -> &'static str {
    match b {
        Branch::G => "g",
        Branch::P => "p",
    }
}

/// Fixed-point CSV `branch,n,lambda,capital_lambda,f_residual,roots_found` (successful modes only).
pub fn write_fixed_point_csv<T: Real, W: Write>(out: W, results: &[Result<FixedPointResult<T>>]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["branch", "n", "lambda", "capital_lambda", "f_residual", "roots_found"]).map_err(csv_err)?;
    for r in results.iter().flatten() {
        wtr.write_record([
            branch_name(r.branch).to_string(),
            r.n.to_string(),
            fmt_num(r.lambda),
            fmt_num(r.capital_lambda),
            fmt_num(r.f_residual),
            r.multiplicity_note.to_string(),
        ])
        .map_err(csv_err)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Root CSV `k,lambda,derivative,simple`.
pub fn write_roots_csv<T: Real, W: Write>(out: W, roots: &[DispersionRoot<T>]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["k", "lambda", "derivative", "simple"]).map_err(csv_err)?;
    for (k, r) in roots.iter().enumerate() {
        wtr.write_record([(k + 1).to_string(), fmt_num(r.lambda), fmt_num(r.derivative), r.simple.to_string()]).map_err(csv_err)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Columns of a mode-function CSV `z,u,w,eta`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeSamples {
    pub z: Vec<f64>,
    pub u: Vec<f64>,
    pub w: Vec<f64>,
    pub eta: Vec<f64>,
}

fn parse_err(path: &Path, detail: impl std::fmt::Display) -> Error {
    Error::InvalidInput(format!("{}: {detail}", path.display()))
}

/// Read a mode-function CSV `z,u,w,eta` (as written by the `modes` command).
pub fn read_mode_csv(path: &Path) -> Result<ModeSamples> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| parse_err(path, e))?;
    let headers = rdr.headers().map_err(|e| parse_err(path, e))?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name).ok_or_else(|| parse_err(path, format!("missing column {name}")));
    let (iz, iu, iw, ie) = (col("z")?, col("u")?, col("w")?, col("eta")?);
    let mut m = ModeSamples { z: vec![], u: vec![], w: vec![], eta: vec![] };
    for rec in rdr.records() {
        let rec = rec.map_err(|e| parse_err(path, e))?;
        let get = |i: usize| -> Result<f64> { rec.get(i).unwrap_or("").trim().parse::<f64>().map_err(|e| parse_err(path, e)) };
        m.z.push(get(iz)?);
        m.u.push(get(iu)?);
        m.w.push(get(iw)?);
        m.eta.push(get(ie)?);
    }
    Ok(m)
}

/// One row of a synthesis index CSV `direction,l,lambda,amplitude,path`.
#[derive(Clone, Debug, PartialEq, Deserialize)]
struct IndexRow {
    direction: Direction,
    l: f64,
    lambda: f64,
    amplitude: f64,
    path: String,
}

/// Read a synthesis index `direction,l,lambda,amplitude,path`; each `path`
/// (relative to the index file) is a mode-function CSV.
pub fn read_mode_index(path: &Path) -> Result<Vec<FieldMode<f64>>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| parse_err(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut modes = Vec::new();
    for row in rdr.deserialize::<IndexRow>() {
        let row = row.map_err(|e| parse_err(path, e))?;
        let s = read_mode_csv(&base.join(&row.path))?;
        modes.push(FieldMode::new(row.direction, row.l, row.lambda, row.amplitude, s.z, s.u, s.w)?);
    }
    if modes.is_empty() {
        return Err(parse_err(path, "index lists no modes"));
    }
    Ok(modes)
}
