use std::path::Path;
use std::process::{Command, Output};

const L: &str = "6.283185307179586";

fn atmosc(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_atmosc")).current_dir(dir).env_remove("ATMOSC_OUT_DIR").args(args).output().expect("binary runs")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn equilibrium_and_env_override() {
    let dir = tempfile::tempdir().unwrap();
    let out = atmosc(dir.path(), &["equilibrium", "--profile", "isentropic", "--out", "a"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("a/profile.csv")).unwrap();
    assert!(csv.starts_with("z,rho,p,c2,n2,entropy\n"));
    // 17 significant digits.
    let first = csv.lines().nth(1).unwrap().split(',').nth(1).unwrap().to_string();
    assert_eq!(first.split('e').next().unwrap().replace(['.', '-'], "").len(), 17, "{first}");
    let summary = json(&dir.path().join("a/equilibrium.json"));
    assert!(summary["hydrostatic_residual"].as_f64().unwrap() < 1e-10);
    assert_eq!(summary["config_hash"].as_str().unwrap().len(), 64);

    let out = Command::new(env!("CARGO_BIN_EXE_atmosc"))
        .current_dir(dir.path())
        .env("ATMOSC_OUT_DIR", dir.path().join("env"))
        .args(["equilibrium", "--profile", "isentropic", "--out", "b"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("env/profile.csv").exists());
    assert!(!dir.path().join("b").exists());
    // Same command, same bytes.
    assert_eq!(std::fs::read(dir.path().join("a/profile.csv")).unwrap(), std::fs::read(dir.path().join("env/profile.csv")).unwrap());
}

#[test]
fn spectra_commands() {
    let dir = tempfile::tempdir().unwrap();
    let out = atmosc(dir.path(), &["spectrum-l0", "--profile", "isentropic", "--n", "3", "--out", "o"]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("o/spectrum_l0.csv")).unwrap();
    assert!(csv.starts_with("n,lambda,residual,zeros\n"));
    assert_eq!(csv.lines().count(), 4);

    let out = atmosc(dir.path(), &["gmodes", "--l", L, "--n-min", "1", "--n-max", "2", "--out", "o"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let g = std::fs::read_to_string(dir.path().join("o/gmodes.csv")).unwrap();
    assert!(g.starts_with("branch,n,lambda,capital_lambda,f_residual,roots_found\ng,1,7.21866"));
    let out = atmosc(dir.path(), &["pmodes", "--l", L, "--n-min", "1", "--n-max", "1", "--out", "o"]);
    assert!(out.status.success());
    assert!(std::fs::read_to_string(dir.path().join("o/pmodes.csv")).unwrap().contains("\np,1,1.07079"));

    let out = atmosc(dir.path(), &["dispersion", "--l", L, "--lambda-min", "8", "--lambda-max", "16", "--grid", "32", "--out", "o"]);
    assert!(out.status.success());
    let d = std::fs::read_to_string(dir.path().join("o/dispersion.csv")).unwrap();
    assert!(d.starts_with("lambda,D\n"));
    assert_eq!(d.lines().count(), 33);
    let s = json(&dir.path().join("o/dispersion.json"));
    assert_eq!(s["roots"].as_array().unwrap().len(), 2);

    // Quantization and input errors.
    let out = atmosc(dir.path(), &["gmodes", "--l", "3.0", "--out", "o"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("incompatible with period"));
}

#[test]
fn modes_then_synthesize() {
    let dir = tempfile::tempdir().unwrap();
    let out = atmosc(dir.path(), &["modes", "--l", L, "--lambda", "10.7079", "--name", "p1", "--out", "m"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("m/p1.csv")).unwrap();
    assert!(csv.starts_with("z,u,w,eta\n"));
    let info = json(&dir.path().join("m/p1.json"));
    assert!((info["lambda"].as_f64().unwrap() - 10.707901484).abs() < 1e-8);
    assert!(info["residual"].as_f64().unwrap() < 1e-5);

    let out = atmosc(
        dir.path(),
        &["synthesize", "--modes", "m/p1_index.csv", "--profile", "stable", "--kind", "standing", "--epsilon", "0.01", "--t0", "0", "--t1", "1", "--nt", "4", "--nx", "8", "--nz", "3", "--out", "s"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let b = std::fs::read_to_string(dir.path().join("s/boundary.csv")).unwrap();
    assert!(b.starts_with("t,x,xbar,zbar\n"));
    assert_eq!(b.lines().count(), 1 + 4 * 8);
    let snap = std::fs::read_to_string(dir.path().join("s/snapshots.csv")).unwrap();
    assert!(snap.starts_with("t,x,z,xi1,xi3\n"));
    assert_eq!(snap.lines().count(), 1 + 4 * 8 * 3);
    let s = json(&dir.path().join("s/synthesize.json"));
    assert!(s["wave_residual"].as_f64().unwrap() < 1e-4);

    let out = atmosc(dir.path(), &["synthesize", "--modes", "m/p1_index.csv", "--epsilon", "5", "--out", "s2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not invertible"));
}

#[test]
fn validate_and_run() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("ok.json"), r#"{"entropy": {"kind": "isentropic"}, "output_dir": "run_out"}"#).unwrap();
    std::fs::write(dir.path().join("bad.json"), r#"{"gas": {"gamma": 1.4, "c_v": 1, "g": -1}, "entropy": {"kind": "table", "eta": [0, 2, 1], "sigma": [0, 0, 0]}}"#).unwrap();
    std::fs::write(dir.path().join("quant.json"), r#"{"stages": {"g": {"l": 9.42477796076938, "n_min": 1, "n_max": 2}}}"#).unwrap();

    let out = atmosc(dir.path(), &["validate", "ok.json"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["diagnostics"].as_array().unwrap().len(), 0);

    let out = atmosc(dir.path(), &["validate", "bad.json"]);
    assert_eq!(out.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let fields: Vec<&str> = v["diagnostics"].as_array().unwrap().iter().map(|d| d["field"].as_str().unwrap()).collect();
    assert!(fields.contains(&"gas.g") && fields.iter().any(|f| f.starts_with("entropy")), "{fields:?}");

    let out = atmosc(dir.path(), &["run", "quant.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("invalid configuration"));

    let out = atmosc(dir.path(), &["run", "ok.json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = json(&dir.path().join("run_out/manifest.json"));
    assert!(m["success"].as_bool().unwrap());
    for f in m["files"].as_array().unwrap() {
        assert_eq!(f["sha256"].as_str().unwrap().len(), 64);
        assert!(dir.path().join("run_out").join(f["path"].as_str().unwrap()).exists());
    }
}
