//! Acceptance criteria AC1–AC10: one `PASS`/`FAIL` line per criterion.
//!
//! Run with `cargo test -p atmosc --test acceptance`; the process exits with a
//! nonzero status when any criterion fails.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use atmosc::dispersion::{
    apply_operator, fit_exponent, frobenius_series, kernel_family_isentropic, reconstruct_eigenfunction, resolvent_solve, scan_and_refine,
    weighted_inner, Forcing,
};
use atmosc::equilibrium::{check_admissible, reference_isentropic, reference_stable, EquilibriumProfile, ProfileTable};
use atmosc::fixedpoint::{default_lambda0, default_mu0, lambda_limit, solve_gmodes, solve_pmodes, Branch, ModeSpec, SpectrumOptions};
use atmosc::problems::{gravity_problem, pressure_problem, vertical_problem, GroundCondition};
use atmosc::slcore::{fd_eigensolve, liouville_transform, shoot_eigensolve, MeshSpec, SLProblem};
use atmosc::vertical::vertical_spectrum;
use atmosc::wavefield::{boundary_motion, standing_field, wave_residual, FieldMode, Direction};
use atmosc::Error;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn stable() -> Arc<EquilibriumProfile<f64>> {
    Arc::new(reference_stable())
}

fn isentropic() -> Arc<EquilibriumProfile<f64>> {
    Arc::new(reference_isentropic())
}

fn spec() -> ModeSpec<f64> {
    ModeSpec::harmonic(1, 1.0, Branch::G).expect("l = 2π fits x₊ = 1")
}

fn ac1() -> Outcome {
    let p = reference_isentropic::<f64>();
    let rep = check_admissible(&p);
    let table = ProfileTable::sample(&p, 2000).map_err(|e| e.to_string())?;
    let n2 = table.z.iter().map(|&z| p.eval(z).map(|f| f.n2.abs())).collect::<Result<Vec<_>, _>>().map_err(|e| e.to_string())?;
    let n2_max = n2.iter().copied().fold(0.0, f64::max);
    let nu = rep.nu_fit.ok_or("no exponent fit")?;
    ensure(rep.hydrostatic_residual < 1e-10, || format!("hydrostatic residual {:e}", rep.hydrostatic_residual))?;
    ensure(n2_max < 1e-12, || format!("sup |N²| = {n2_max:e}"))?;
    ensure((nu - 2.5).abs() <= 0.01, || format!("fitted exponent {nu}"))?;
    Ok(format!("hydrostatic {:.1e}, sup|N²| {:.1e}, exponent {nu:.6}", rep.hydrostatic_residual, n2_max))
}

fn ac2() -> Outcome {
    // λ_k = g j²_{ν,k}/(4ν z₊) with ν = 2.5, i.e. zeros of the spherical Bessel function j₂, over 10.
    let closed = [3.321746191426837, 8.271923110149327, 15.185487416406847];
    let s = vertical_spectrum(isentropic(), 3).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for (m, want) in s.modes.iter().zip(closed) {
        worst = worst.max(rel(m.pair.value, want)).max(rel(m.oracle_value, want));
    }
    ensure(worst < 1e-4, || format!("worst relative error {worst:e}"))?;
    Ok(format!("λ = {:.6}, {:.6}, {:.6}; worst relative error {worst:.1e}", s.modes[0].pair.value, s.modes[1].pair.value, s.modes[2].pair.value))
}

struct Spectra {
    g: Vec<f64>,
    g_next: f64,
    p: Vec<f64>,
    p_prev: f64,
    p_next: f64,
}

fn gmodes(n: std::ops::RangeInclusive<usize>) -> Result<Vec<atmosc::fixedpoint::FixedPointResult<f64>>, String> {
    let (p, s) = (stable(), spec());
    solve_gmodes(&p, &s, n, default_lambda0(&p, &s), &SpectrumOptions::default())
        .map_err(|e| e.to_string())?
        .into_iter()
        .map(|r| r.map_err(|e| e.to_string()))
        .collect()
}

fn pmodes(n: std::ops::RangeInclusive<usize>) -> Result<Vec<atmosc::fixedpoint::FixedPointResult<f64>>, String> {
    let (p, s) = (stable(), spec());
    let mu0 = default_mu0(&p, &s).map_err(|e| e.to_string())?;
    solve_pmodes(&p, &s, n, mu0, &SpectrumOptions::default())
        .map_err(|e| e.to_string())?
        .into_iter()
        .map(|r| r.map_err(|e| e.to_string()))
        .collect()
}

fn ac3() -> Outcome {
    let (p, s) = (stable(), spec());
    let lg = lambda_limit(&p, &s);
    let res = gmodes(1..=8)?;
    ensure(res.len() == 8, || format!("{} modes", res.len()))?;
    for r in &res {
        ensure(r.f_residual < 1e-8, || format!("n={} residual {:e}", r.n, r.f_residual))?;
        ensure(r.lambda > 0.0 && r.lambda < lg, || format!("n={} λ={} outside (0, lg)", r.n, r.lambda))?;
    }
    ensure(res.windows(2).all(|w| w[1].lambda <= w[0].lambda), || "not nonincreasing".into())?;
    ensure(res[7].lambda <= 0.5 * res[0].lambda, || format!("λ₋₈ = {} > λ₋₁/2", res[7].lambda))?;
    let worst = res.iter().map(|r| r.f_residual).fold(0.0, f64::max);
    Ok(format!("λ₋₁ = {:.8}, λ₋₈ = {:.8}, max residual {worst:.1e}", res[0].lambda, res[7].lambda))
}

fn ac4() -> Outcome {
    let (p, s) = (stable(), spec());
    let lg = lambda_limit(&p, &s);
    let res = pmodes(5..=12)?;
    let v: Vec<f64> = res.iter().map(|r| r.lambda).collect();
    ensure(v.iter().all(|&x| x > lg), || "a p-mode below lg".into())?;
    ensure(v.windows(2).all(|w| w[1] > w[0]), || "not strictly increasing".into())?;
    let ratio = v[7] / v[1];
    ensure((ratio / 4.0 - 1.0).abs() <= 0.25, || format!("λ₁₂/λ₆ = {ratio}"))?;
    Ok(format!("λ₅ = {:.6}, λ₁₂ = {:.6}, λ₁₂/λ₆ = {ratio:.4}", v[0], v[7]))
}

fn spectra() -> Result<Spectra, String> {
    let g: Vec<f64> = gmodes(1..=9)?.iter().map(|r| r.lambda).collect();
    let p: Vec<f64> = pmodes(4..=13)?.iter().map(|r| r.lambda).collect();
    Ok(Spectra { g: g[..8].to_vec(), g_next: g[8], p: p[1..9].to_vec(), p_prev: p[0], p_next: p[9] })
}

fn ac5() -> Outcome {
    let (p, s) = (stable(), spec());
    let sp = spectra()?;
    // Scanned ranges contain exactly the labelled modes (midpoints to the neighbours).
    let g_range = (0.5 * (sp.g[7] + sp.g_next), default_lambda0(&p, &s));
    let p_range = (0.5 * (sp.p_prev + sp.p[0]), 0.5 * (sp.p[7] + sp.p_next));
    let g_roots = scan_and_refine(&p, &s, g_range, 160).map_err(|e| e.to_string())?.root_values();
    let p_roots = scan_and_refine(&p, &s, p_range, 96).map_err(|e| e.to_string())?.root_values();
    let mut worst = 0.0f64;
    let mut check = |vals: &[f64], roots: &[f64], what: &str| -> Result<(), String> {
        ensure(roots.len() == vals.len(), || format!("{what}: {} roots vs {} fixed points", roots.len(), vals.len()))?;
        for &v in vals {
            let d = roots.iter().map(|&r| rel(r, v)).fold(f64::INFINITY, f64::min);
            worst = worst.max(d);
            ensure(d < 1e-5, || format!("{what}: fixed point {v} has no root within 1e-5 ({d:e})"))?;
        }
        for &r in roots {
            let d = vals.iter().map(|&v| rel(r, v)).fold(f64::INFINITY, f64::min);
            ensure(d < 1e-5, || format!("{what}: root {r} has no fixed point within 1e-5 ({d:e})"))?;
        }
        Ok(())
    };
    check(&sp.g, &g_roots, "g")?;
    check(&sp.p, &p_roots, "p")?;
    Ok(format!("{} + {} eigenvalues matched both ways; worst relative gap {worst:.1e}", sp.g.len(), sp.p.len()))
}

fn ac6() -> Outcome {
    let (p, s) = (stable(), spec());
    let nu = p.nu();
    let k = 8;
    let fs = frobenius_series(&p, &s, 2.0, k).map_err(|e| e.to_string())?;
    let ss: Vec<f64> = (0..13).map(|i| 1e-6 * 10f64.powf(i as f64 / 4.0)).collect();
    let rs: Vec<f64> = ss.iter().map(|&x| fs.residual(x)).collect();
    let slope = fit_exponent(&ss, &rs);
    ensure(slope >= k as f64 - 0.5, || format!("residual slope {slope}"))?;
    let lg = lambda_limit(&p, &s);
    let roots: Vec<f64> = scan_and_refine(&p, &s, (1.1 * lg, 20.0), 32).map_err(|e| e.to_string())?.root_values();
    let g_root = *scan_and_refine(&p, &s, (0.05, 0.9 * lg), 24).map_err(|e| e.to_string())?.root_values().last().ok_or("no g root")?;
    let mut worst = 0.0f64;
    for lam in roots.iter().copied().chain([g_root]) {
        let m = reconstruct_eigenfunction(&p, &s, lam).map_err(|e| e.to_string())?;
        let trace = *m.w.last().expect("samples");
        ensure(trace.is_finite() && (trace - 1.0).abs() < 1e-12, || format!("w(z₊) = {trace} at λ = {lam}"))?;
        let n = m.s.len();
        let (sw, ew) = (&m.s[n - 40..n - 1], &m.eta[n - 40..n - 1]);
        let e = fit_exponent(sw, ew);
        let dev = (e - (nu + 1.0)).abs() / (nu + 1.0);
        worst = worst.max(dev);
        ensure(dev < 0.05, || format!("η exponent {e} vs {} at λ = {lam}", nu + 1.0))?;
    }
    Ok(format!("residual slope {slope:.2} (K = {k}); {} eigenfunctions with w(z₊) = 1, η exponent within {:.2}%", roots.len() + 1, 100.0 * worst))
}

fn ac7() -> Outcome {
    let (iso, s) = (isentropic(), spec());
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let bumps: Vec<(f64, f64)> = (0..5).map(|_| (rng.gen_range(0.35..0.65), rng.gen_range(0.25..0.33))).collect();
    let ratio_on = |nodes: usize, c: f64, h: f64| -> Result<f64, String> {
        let z = atmosc::grid::Grid::graded(1.0, nodes).z;
        let bump = |x: f64| -> (f64, f64) {
            let r = (x - c) / h;
            if r.abs() >= 1.0 {
                return (0.0, 0.0);
            }
            let e = (-1.0 / (1.0 - r * r)).exp();
            (e, e * (-2.0 * r / (1.0 - r * r).powi(2)) / h)
        };
        let (u, w) = kernel_family_isentropic(&iso, &s, &z, bump).map_err(|e| e.to_string())?;
        let (lu, lw) = apply_operator(&iso, &s, &z, &u, &w).map_err(|e| e.to_string())?;
        let rho: Vec<f64> = z.iter().map(|&x| if x < 1.0 { iso.eval(x).map(|f| f.rho).unwrap_or(0.0) } else { 0.0 }).collect();
        let num = (weighted_inner(&z, &rho, &lu, &lu) + weighted_inner(&z, &rho, &lw, &lw)).sqrt();
        let den = (weighted_inner(&z, &rho, &u, &u) + weighted_inner(&z, &rho, &w, &w)).sqrt();
        Ok(num / den)
    };
    let mut worst = 0.0f64;
    for &(c, h) in &bumps {
        let coarse = ratio_on(2000, c, h)?;
        let fine = ratio_on(4000, c, h)?;
        // Convergence: the ratio decreases under refinement and is below the bound.
        ensure(fine <= coarse, || format!("ratio grew under refinement ({coarse:e} → {fine:e})"))?;
        ensure(fine < 1e-6, || format!("bump ({c:.3}, {h:.3}) ratio {fine:e}"))?;
        worst = worst.max(fine);
    }
    Ok(format!("5 random bumps; worst ‖L(u,w)‖/‖(u,w)‖ = {worst:.1e}"))
}

fn ac8() -> Outcome {
    let (p, s) = (stable(), spec());
    let lg = lambda_limit(&p, &s);
    let g_roots = scan_and_refine(&p, &s, (0.02, 0.9 * lg), 48).map_err(|e| e.to_string())?.root_values();
    let p_roots = scan_and_refine(&p, &s, (1.1 * lg, 30.0), 48).map_err(|e| e.to_string())?.root_values();
    let lams = [0.3, 1.7, 4.0, 12.0, 0.5 * (p_roots[0] + p_roots[1])];
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let cases: Vec<(f64, [f64; 6])> = lams.iter().flat_map(|&l| (0..10).map(move |_| l)).map(|l| (l, std::array::from_fn(|_| rng.gen_range(-1.0..1.0)))).collect();
    let residuals: Vec<Result<f64, String>> = cases
        .par_iter()
        .map(|(lam, c)| {
            let f = Forcing::sample(&*p, 2000, |z| {
                (c[0] + c[1] * (PI * z).cos() + c[2] * (2.0 * PI * z).cos(), c[3] * (PI * z).sin() + c[4] * z + c[5] * z * z)
            });
            resolvent_solve(&p, &s, *lam, &f).map(|r| r.solution.residual).map_err(|e| e.to_string())
        })
        .collect();
    let mut worst = 0.0f64;
    for r in residuals {
        let r = r?;
        worst = worst.max(r);
    }
    ensure(worst < 1e-6, || format!("worst resolvent residual {worst:e}"))?;
    let f = Forcing::sample(&*p, 2000, |z| (1.0 + z, z * (1.0 - z)));
    let all: Vec<f64> = g_roots.iter().chain(&p_roots).copied().collect();
    for &root in &all {
        let lam = root * (1.0 + 1e-9);
        match resolvent_solve(&p, &s, lam, &f) {
            Err(Error::NearEigenvalue { .. }) => {}
            other => return Err(format!("no NearEigenvalue at {lam} (root {root}): {:?}", other.map(|r| r.solution.residual))),
        }
    }
    Ok(format!("50 forcings at 5 λ, worst residual {worst:.1e}; NearEigenvalue at all {} roots", all.len()))
}

fn ac9() -> Outcome {
    let stable = stable();
    let l = 2.0 * PI;
    let lambda0 = default_lambda0(&stable, &spec());
    let suite: Vec<(&str, SLProblem<f64>)> = vec![
        ("box", SLProblem::dirichlet_box(PI)),
        ("isentropic l=0", vertical_problem(isentropic()).map_err(|e| e.to_string())?),
        ("stable l=0", vertical_problem(stable.clone()).map_err(|e| e.to_string())?),
        ("g-form λ=0", gravity_problem(stable.clone(), l, 0.0, GroundCondition::Physical).map_err(|e| e.to_string())?),
        ("g-form λ=λ₀/2", gravity_problem(stable.clone(), l, 0.5 * lambda0, GroundCondition::Physical).map_err(|e| e.to_string())?),
        ("p-form μ=0", pressure_problem(stable, l, 0.0, GroundCondition::Physical).map_err(|e| e.to_string())?),
    ];
    let results: Vec<Result<f64, String>> = suite
        .par_iter()
        .map(|(name, prob)| {
            let fd = fd_eigensolve(prob, 5, MeshSpec::new(1000, 2)).map_err(|e| format!("{name}: {e}"))?;
            let form = liouville_transform(prob).map_err(|e| format!("{name}: {e}"))?;
            let sh = shoot_eigensolve(&form, 5, 1e-8).map_err(|e| format!("{name}: {e}"))?;
            let worst = fd.iter().zip(&sh).map(|(a, b)| rel(a.value, b.value)).fold(0.0, f64::max);
            ensure(worst < 1e-6, || format!("{name}: worst gap {worst:e}"))?;
            Ok(worst)
        })
        .collect();
    let mut worst = 0.0f64;
    for r in results {
        worst = worst.max(r?);
    }
    Ok(format!("6 problems × 5 eigenvalues, worst FD/shooting gap {worst:.1e}"))
}

fn ac10() -> Outcome {
    let (p, s) = (stable(), spec());
    let lg = lambda_limit(&p, &s);
    let lam = scan_and_refine(&p, &s, (1.1 * lg, 14.0), 24).map_err(|e| e.to_string())?.root_values()[0];
    let mf = reconstruct_eigenfunction(&p, &s, lam).map_err(|e| e.to_string())?;
    let mode = FieldMode::from_mode(Direction::X, s.l, 1.0, &mf).map_err(|e| e.to_string())?;
    let omega = mode.omega();
    let field = standing_field(vec![mode], 1.0, 1.0, p.z_plus).map_err(|e| e.to_string())?;
    let period = 2.0 * PI / omega;
    let mut defect = 0.0f64;
    for &(t, x, z) in &[(0.3, 0.1, 0.5), (1.1, 0.7, 0.9), (2.9, 0.45, 0.2)] {
        let a = field.xi(t, x, 0.0, z);
        let b = field.xi(t + period, x, 0.0, z);
        let n = a.iter().map(|v| v * v).sum::<f64>().sqrt();
        let d = a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt();
        defect = defect.max(d / n);
    }
    ensure(defect < 1e-10, || format!("periodicity defect {defect:e}"))?;
    let times: Vec<f64> = (0..16).map(|k| period * (k as f64 + 0.3) / 16.0).collect();
    let residual = wave_residual(&field, &p, &times).map_err(|e| e.to_string())?;
    ensure(residual < 1e-4, || format!("wave residual {residual:e}"))?;
    let xs: Vec<f64> = (0..32).map(|j| j as f64 / 32.0).collect();
    let err = |eps: f64| -> Result<f64, String> {
        let b = boundary_motion(&field, eps, &times, &xs).map_err(|e| e.to_string())?;
        let mut e = 0.0f64;
        for (i, t) in times.iter().enumerate() {
            for (j, xb) in xs.iter().enumerate() {
                e = e.max((b.zbar[i][j] - p.z_plus - eps * (omega * t).sin() * (s.l * xb).cos()).abs());
            }
        }
        Ok(e)
    };
    let order = (err(0.02)? / err(0.01)?).log2();
    ensure(order >= 1.9, || format!("observed order {order}"))?;
    Ok(format!("λ = {lam:.6}: periodicity {defect:.1e}, wave residual {residual:.1e}, ε-order {order:.3}"))
}

fn main() {
    let criteria: [(&str, &str, fn() -> Outcome, Duration); 10] = [
        ("AC1", "equilibrium fidelity", ac1, Duration::from_secs(1)),
        ("AC2", "vertical spectrum closed form", ac2, Duration::from_secs(10)),
        ("AC3", "g-mode existence and accumulation", ac3, Duration::from_secs(60)),
        ("AC4", "p-mode growth", ac4, Duration::from_secs(60)),
        ("AC5", "cross-method spectrum agreement", ac5, Duration::from_secs(120)),
        ("AC6", "Frobenius structure", ac6, Duration::from_secs(120)),
        ("AC7", "isentropic kernel", ac7, Duration::from_secs(120)),
        ("AC8", "resolvent", ac8, Duration::from_secs(120)),
        ("AC9", "Liouville invariance", ac9, Duration::from_secs(120)),
        ("AC10", "wave synthesis", ac10, Duration::from_secs(120)),
    ];
    let mut failures = 0;
    for (id, name, f, budget) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panic".into()))
        });
        let elapsed = start.elapsed();
        let outcome = outcome.and_then(|m| if elapsed <= budget { Ok(m) } else { Err(format!("{m}; runtime {elapsed:.2?} exceeds {budget:?}")) });
        match outcome {
            Ok(msg) => println!("{id} PASS {name}: {msg} [{:.2?}]", elapsed),
            Err(msg) => {
                failures += 1;
                println!("{id} FAIL {name}: {msg} [{:.2?}]", elapsed)
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", 10 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
