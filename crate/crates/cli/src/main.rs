//! `atmosc`: command-line front end of the spectral laboratory.
//!
//! Every command writes plot-ready CSVs (header row, 17 significant digits)
//! and a JSON summary carrying the configuration hash into the output
//! directory: `ATMOSC_OUT_DIR` if set, else `--out`, else the configuration's
//! `output_dir`, else `atmosc_out`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use atmosc::dispersion::{reconstruct_eigenfunction, scan_and_refine, scan_with, write_mode_function_csv};
use atmosc::equilibrium::EquilibriumProfile;
use atmosc::fixedpoint::{default_lambda0, default_mu0, solve_gmodes, solve_pmodes, Branch, SpectrumOptions};
use atmosc::pipeline::{
    equilibrium_summary, hash_json, linspace, periodic_grid, read_mode_index, render, resolve_output_dir, run_in, validate, write_file,
    write_fixed_point_csv, write_profile_csv, write_roots_csv, EntropyConfig, FileRecord, RunConfig, MANIFEST_FILE,
    PROFILE_TABLE_INTERVALS,
};
use atmosc::slcore::{fmt_num, write_eigenpairs_csv};
use atmosc::vertical::vertical_spectrum;
use atmosc::wavefield::{boundary_motion, synthesize_field, wave_residual, write_snapshot_csv, FieldKind, DEFAULT_EPSILON};
use atmosc::{Error, Result};

#[derive(Parser)]
#[command(name = "atmosc", version, about = "Spectral laboratory for stratified atmospheres with a vacuum boundary")]
struct Cli {
    /// Output directory (overridden by ATMOSC_OUT_DIR).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct ProfileArg {
    /// Background: `stable`, `isentropic`, or a JSON run configuration file.
    #[arg(long, default_value = "stable")]
    profile: String,
}

#[derive(Subcommand)]
enum Command {
    /// Build the equilibrium and write `profile.csv` and `equilibrium.json`.
    Equilibrium {
        #[command(flatten)]
        profile: ProfileArg,
        /// Intervals of the graded output table.
        #[arg(long, default_value_t = PROFILE_TABLE_INTERVALS)]
        intervals: usize,
    },
    /// Vertical (l = 0) spectrum: `spectrum_l0.csv`.
    #[command(name = "spectrum-l0")]
    SpectrumL0 {
        #[command(flatten)]
        profile: ProfileArg,
        #[arg(long, default_value_t = 5)]
        n: usize,
    },
    /// Gravity modes as fixed points: `gmodes.csv`.
    Gmodes {
        #[command(flatten)]
        profile: ProfileArg,
        #[arg(long)]
        l: f64,
        #[arg(long, default_value_t = 1)]
        n_min: usize,
        #[arg(long, default_value_t = 8)]
        n_max: usize,
        /// Largest root parameter λ₀ (defaults to 0.9 of the limit).
        #[arg(long)]
        parameter0: Option<f64>,
    },
    /// Pressure modes as fixed points: `pmodes.csv`.
    Pmodes {
        #[command(flatten)]
        profile: ProfileArg,
        #[arg(long)]
        l: f64,
        #[arg(long, default_value_t = 1)]
        n_min: usize,
        #[arg(long, default_value_t = 8)]
        n_max: usize,
        /// Largest root parameter μ₀ (defaulted when absent).
        #[arg(long)]
        parameter0: Option<f64>,
    },
    /// Dispersion function scan with refined roots: `dispersion.csv`, `dispersion_roots.csv`.
    Dispersion {
        #[command(flatten)]
        profile: ProfileArg,
        #[arg(long)]
        l: f64,
        #[arg(long)]
        lambda_min: f64,
        #[arg(long)]
        lambda_max: f64,
        #[arg(long, default_value_t = 200)]
        grid: usize,
    },
    /// Eigenfunction at a dispersion root: `<name>.csv` (z,u,w,eta) and a synthesis index `<name>_index.csv`.
    Modes {
        #[command(flatten)]
        profile: ProfileArg,
        #[arg(long)]
        l: f64,
        /// Root estimate; refined to the nearest root within 0.1 %.
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value = "mode")]
        name: String,
        #[arg(long, default_value_t = 1.0)]
        amplitude: f64,
    },
    /// Synthesize a field from an index CSV `direction,l,lambda,amplitude,path`.
    Synthesize {
        #[arg(long)]
        modes: PathBuf,
        #[arg(long, default_value = "standing")]
        kind: String,
        #[arg(long, default_value_t = DEFAULT_EPSILON)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.0)]
        t0: f64,
        #[arg(long, default_value_t = 10.0)]
        t1: f64,
        #[arg(long, default_value_t = 11)]
        nt: usize,
        #[arg(long, default_value_t = 32)]
        nx: usize,
        #[arg(long, default_value_t = 21)]
        nz: usize,
        #[arg(long, default_value_t = 1.0)]
        x_plus: f64,
        #[arg(long)]
        y_plus: Option<f64>,
        /// Background for the wave-equation residual (omitted: residual not computed).
        #[arg(long)]
        profile: Option<String>,
    },
    /// Validate a run configuration; prints diagnostics, exit status 1 when any.
    Validate { config: PathBuf },
    /// Execute a run configuration; writes all stage files and `manifest.json`.
    Run { config: PathBuf },
}

fn load_profile_config(name: &str) -> Result<RunConfig> {
    match name {
        "isentropic" => Ok(RunConfig::default()),
        "stable" => Ok(RunConfig { entropy: EntropyConfig::Linear { beta: 0.5, s0: 0.0 }, ..RunConfig::default() }),
        path => {
            let c = RunConfig::from_file(Path::new(path))?;
            let d = validate(&c);
            if d.is_empty() {
                Ok(c)
            } else {
                Err(Error::ConfigInvalid(d.iter().map(|d| d.to_string()).collect()))
            }
        }
    }
}

struct Ctx {
    out: Option<PathBuf>,
}

impl Ctx {
    fn dir(&self, config: Option<&RunConfig>) -> PathBuf {
        let preferred = self.out.as_ref().map(|p| p.display().to_string()).or_else(|| config.and_then(|c| c.output_dir.clone()));
        resolve_output_dir(preferred.as_deref())
    }
}

/// Hash of the command, its background and its numeric arguments.
fn command_hash(command: &str, config: Option<&RunConfig>, args: &Value) -> String {
    let mut background = config.map(|c| serde_json::to_value(c).expect("config serializes"));
    if let Some(Value::Object(m)) = background.as_mut() {
        m.remove("output_dir");
        m.remove("stages");
    }
    hash_json(&json!({"command": command, "background": background, "args": args}))
}

fn write_summary(dir: &Path, name: &str, mut body: Value, hash: &str, files: &[FileRecord]) -> Result<()> {
    if let Value::Object(m) = &mut body {
        m.insert("config_hash".into(), json!(hash));
        m.insert("files".into(), serde_json::to_value(files).expect("records serialize"));
    }
    write_file(dir, name, &serde_json::to_vec_pretty(&body).expect("json"))?;
    Ok(())
}

fn build(c: &RunConfig) -> Result<Arc<EquilibriumProfile<f64>>> {
    c.build_profile()
}

fn execute(cli: Cli) -> Result<ExitCode> {
    let ctx = Ctx { out: cli.out };
    match cli.command {
        Command::Equilibrium { profile, intervals } => {
            let c = load_profile_config(&profile.profile)?;
            let p = build(&c)?;
            let dir = ctx.dir(Some(&c));
            let hash = command_hash("equilibrium", Some(&c), &json!({"intervals": intervals}));
            let files = vec![write_file(&dir, "profile.csv", &render(|b| write_profile_csv(b, &*p, intervals))?)?];
            let summary = equilibrium_summary(&p, &hash);
            let ok = summary["admissible"].as_bool().unwrap_or(false);
            write_summary(&dir, "equilibrium.json", summary, &hash, &files)?;
            println!("{}", dir.join("profile.csv").display());
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::SpectrumL0 { profile, n } => {
            let c = load_profile_config(&profile.profile)?;
            let p = build(&c)?;
            let dir = ctx.dir(Some(&c));
            let hash = command_hash("spectrum-l0", Some(&c), &json!({"n": n}));
            let s = vertical_spectrum(p, n)?;
            let files = vec![write_file(&dir, "spectrum_l0.csv", &render(|b| write_eigenpairs_csv(b, &s.pairs()))?)?];
            let modes: Vec<Value> = s
                .modes
                .iter()
                .map(|m| json!({"n": m.pair.index, "lambda": m.pair.value, "oracle": m.oracle_value, "relative_gap": m.relative_gap, "cross_validated": m.cross_validated}))
                .collect();
            let ok = s.modes.iter().all(|m| m.cross_validated);
            write_summary(&dir, "spectrum_l0.json", json!({"profile": s.profile_id, "modes": modes}), &hash, &files)?;
            println!("{}", dir.join("spectrum_l0.csv").display());
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Gmodes { profile, l, n_min, n_max, parameter0 } => branch_command(&ctx, &profile.profile, Branch::G, l, n_min, n_max, parameter0),
        Command::Pmodes { profile, l, n_min, n_max, parameter0 } => branch_command(&ctx, &profile.profile, Branch::P, l, n_min, n_max, parameter0),
        Command::Dispersion { profile, l, lambda_min, lambda_max, grid } => {
            let c = load_profile_config(&profile.profile)?;
            let p = build(&c)?;
            let spec = c.mode_spec(l, Branch::G)?;
            let dir = ctx.dir(Some(&c));
            let hash = command_hash("dispersion", Some(&c), &json!({"l": l, "lambda_min": lambda_min, "lambda_max": lambda_max, "grid": grid}));
            let scan = scan_and_refine(&p, &spec, (lambda_min, lambda_max), grid)?;
            let files = vec![
                write_file(&dir, "dispersion.csv", &render(|b| scan.write_csv(b))?)?,
                write_file(&dir, "dispersion_roots.csv", &render(|b| write_roots_csv(b, &scan.roots))?)?,
            ];
            let roots: Vec<Value> = scan.roots.iter().map(|r| json!({"lambda": r.lambda, "derivative": r.derivative, "simple": r.simple})).collect();
            write_summary(&dir, "dispersion.json", json!({"z_match": scan.z_match, "roots": roots, "skipped": scan.skipped}), &hash, &files)?;
            println!("{}", dir.join("dispersion.csv").display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Modes { profile, l, lambda, name, amplitude } => {
            let c = load_profile_config(&profile.profile)?;
            let p = build(&c)?;
            let spec = c.mode_spec(l, Branch::G)?;
            let dir = ctx.dir(Some(&c));
            let hash = command_hash("modes", Some(&c), &json!({"l": l, "lambda": lambda}));
            // Refine the estimate to a root in a narrow window around it.
            let window = (lambda * (1.0 - 1e-3), lambda * (1.0 + 1e-3));
            let refined = scan_with(&p, &spec, window, 16, p.z_plus * 0.5)
                .ok()
                .and_then(|s| s.root_values().into_iter().min_by(|a, b| (a - lambda).abs().total_cmp(&(b - lambda).abs())))
                .unwrap_or(lambda);
            let m = reconstruct_eigenfunction(&p, &spec, refined)?;
            let csv_name = format!("{name}.csv");
            let mut files = vec![write_file(&dir, &csv_name, &render(|b| write_mode_function_csv(b, &m))?)?];
            let index = format!("direction,l,lambda,amplitude,path\nx,{},{},{},{}\n", fmt_num(l), fmt_num(m.lambda), fmt_num(amplitude), csv_name);
            files.push(write_file(&dir, &format!("{name}_index.csv"), index.as_bytes())?);
            let body = json!({"l": l, "lambda": m.lambda, "lambda_estimate": lambda, "alpha": m.alpha, "u_trace": m.u_trace, "glue_sine": m.glue_sine, "residual": m.residual});
            write_summary(&dir, &format!("{name}.json"), body, &hash, &files)?;
            println!("{}", dir.join(&csv_name).display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Synthesize { modes, kind, epsilon, t0, t1, nt, nx, nz, x_plus, y_plus, profile } => {
            let kind: FieldKind = kind.parse()?;
            let field_modes = read_mode_index(&modes)?;
            let z_plus = *field_modes[0].z.last().expect("nonempty");
            let field = synthesize_field(kind, field_modes, x_plus, y_plus.unwrap_or(x_plus), z_plus)?;
            let background = profile.as_deref().map(load_profile_config).transpose()?;
            let dir = ctx.dir(background.as_ref());
            let mode_bytes = std::fs::read(&modes)?;
            let args = json!({"modes_index": String::from_utf8_lossy(&mode_bytes), "kind": kind, "epsilon": epsilon, "t0": t0, "t1": t1, "nt": nt, "nx": nx, "nz": nz, "x_plus": x_plus, "y_plus": y_plus});
            let hash = command_hash("synthesize", background.as_ref(), &args);
            let times = linspace(t0, t1, nt);
            let xs = periodic_grid(x_plus, nx);
            let surface = boundary_motion(&field, epsilon, &times, &xs)?;
            let zs = linspace(0.0, z_plus, nz);
            let files = vec![
                write_file(&dir, "boundary.csv", &render(|b| surface.write_csv(b))?)?,
                write_file(&dir, "snapshots.csv", &render(|b| write_snapshot_csv(b, &field, &times, &xs, &zs))?)?,
            ];
            let residual = match &background {
                Some(c) => Some(wave_residual(&field, &build(c)?, &times)?),
                None => None,
            };
            write_summary(&dir, "synthesize.json", json!({"modes": field.modes.len(), "wave_residual": residual}), &hash, &files)?;
            println!("{}", dir.join("boundary.csv").display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { config } => {
            let c = RunConfig::from_file(&config)?;
            let d = validate(&c);
            let body = json!({"config_hash": c.hash(), "valid": d.is_empty(), "diagnostics": d});
            println!("{}", serde_json::to_string_pretty(&body).expect("json"));
            Ok(if d.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Run { config } => {
            let c = RunConfig::from_file(&config)?;
            let dir = ctx.dir(Some(&c));
            let m = run_in(&c, &dir)?;
            for s in &m.stages {
                eprintln!("{:<12} {:?}{}", s.name, s.status, s.message.as_ref().map(|m| format!(": {m}")).unwrap_or_default());
            }
            eprintln!("cross-validation: max relative disagreement {:e} over {} pairs", m.cross_validation.max_relative_disagreement, m.cross_validation.pairs.len());
            println!("{}", dir.join(MANIFEST_FILE).display());
            Ok(if m.success { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
    }
}

fn branch_command(ctx: &Ctx, profile: &str, branch: Branch, l: f64, n_min: usize, n_max: usize, parameter0: Option<f64>) -> Result<ExitCode> {
    let c = load_profile_config(profile)?;
    let p = build(&c)?;
    let spec = c.mode_spec(l, branch)?;
    let dir = ctx.dir(Some(&c));
    let (name, command) = match branch {
        Branch::G => ("gmodes", "gmodes"),
        Branch::P => ("pmodes", "pmodes"),
    };
    if n_min == 0 || n_max < n_min {
        return Err(Error::InvalidInput("need 1 <= n-min <= n-max".into()));
    }
    let hash = command_hash(command, Some(&c), &json!({"l": l, "n_min": n_min, "n_max": n_max, "parameter0": parameter0}));
    let opts = SpectrumOptions::default();
    let results = match branch {
        Branch::G => solve_gmodes(&p, &spec, n_min..=n_max, parameter0.unwrap_or_else(|| default_lambda0(&p, &spec)), &opts)?,
        Branch::P => {
            let mu0 = match parameter0 {
                Some(m) => m,
                None => default_mu0(&p, &spec)?,
            };
            solve_pmodes(&p, &spec, n_min..=n_max, mu0, &opts)?
        }
    };
    let files = vec![write_file(&dir, &format!("{name}.csv"), &render(|b| write_fixed_point_csv(b, &results))?)?];
    let errors: Vec<Value> = results
        .iter()
        .enumerate()
        .filter_map(|(k, r)| r.as_ref().err().map(|e| json!({"n": n_min + k, "error": e.to_string()})))
        .collect();
    let ok = errors.is_empty();
    write_summary(&dir, &format!("{name}.json"), json!({"l": l, "errors": errors}), &hash, &files)?;
    println!("{}", dir.join(format!("{name}.csv")).display());
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
