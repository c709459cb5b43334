use super::*;
use crate::equilibrium::{build_equilibrium, reference_isentropic, reference_stable, GasParameters, Isentropic};
use crate::fixedpoint::{default_lambda0, default_mu0, solve_gmodes, solve_pmodes, Branch, SpectrumOptions};
use crate::slcore::sign_changes;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn stable() -> Arc<EquilibriumProfile<f64>> {
    Arc::new(reference_stable())
}

fn iso() -> Arc<EquilibriumProfile<f64>> {
    Arc::new(reference_isentropic())
}

fn spec() -> ModeSpec<f64> {
    ModeSpec::harmonic(1, 1.0, Branch::G).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn system_coefficients() {
    let (p, s) = (stable(), spec());
    assert!(matches!(assemble_system(&p, &s, 0.0), Err(Error::ZeroLambda)));
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let lam = rng.gen_range(0.01..50.0);
        let z = rng.gen_range(0.0..0.999);
        let a = assemble_system(&p, &s, lam).unwrap().matrix(z).unwrap();
        assert!((a[0][0] + a[1][1]).abs() < 1e-14);
    }
    let lg = s.l * p.params.g;
    let a = assemble_system(&p, &s, lg).unwrap();
    for z in [0.0, 0.3, 0.9] {
        assert!(a.matrix(z).unwrap()[1][0].abs() < 1e-14);
    }
    let i = iso();
    let sys = assemble_system(&i, &s, 3.0).unwrap();
    for z in [0.1, 0.5, 0.95] {
        let f = i.eval(z).unwrap();
        let q = sys.turning_factor(z).unwrap();
        assert!((sys.matrix(z).unwrap()[0][1] * f.c2 * f.rho - q).abs() < 1e-12);
    }
}

#[test]
fn turning_points() {
    let s = spec();
    let (p, i) = (stable(), iso());
    let c0 = p.eval(0.0).unwrap().c2;
    assert_eq!(turning_point(&p, &s, 1.01 * s.l * s.l * c0).unwrap(), None);
    // Isentropic closed form z(λ) = z₊ − νλ/(g l²).
    for lam in [0.5, 2.0, 10.0] {
        let z = turning_point(&i, &s, lam).unwrap().unwrap();
        assert!((z - (1.0 - 2.5 * lam / (s.l * s.l))).abs() < 1e-10, "{z}");
    }
    let lam = 0.05;
    let zt = turning_point(&p, &s, lam).unwrap().unwrap();
    let sys = assemble_system(&p, &s, lam).unwrap();
    assert!(sys.turning_factor(0.5 * zt).unwrap() < 0.0);
    assert!(sys.turning_factor(zt + 0.5 * (1.0 - zt)).unwrap() > 0.0);
    assert!(turning_point(&p, &s, 0.1).unwrap().unwrap() < zt);
}

#[test]
fn frobenius_structure() {
    let (p, s) = (stable(), spec());
    let nu = p.nu();
    let fs = frobenius_series(&p, &s, 2.0, 8).unwrap();
    assert!((fs.phi_s1(1e-6)[0] - 1.0).abs() < 1e-5);
    assert!((fs.leading_transform[0][1] + 1.0 / (p.params.g * p.c_rho)).abs() < 1e-10);
    // η = O(s^{ν+1}) on φ_S1; φ_S2 w ~ −s^{−ν}/(g C_ρ).
    let ss: Vec<f64> = (0..10).map(|k| 1e-6 * 10f64.powf(k as f64 / 3.0)).collect();
    let eta: Vec<f64> = ss.iter().map(|&x| fs.phi_s1(x)[1]).collect();
    assert!((fit_exponent(&ss, &eta) - (nu + 1.0)).abs() < 0.01 * (nu + 1.0));
    let w2: Vec<f64> = ss.iter().map(|&x| fs.phi_s2(x).unwrap()[0]).collect();
    assert!((fit_exponent(&ss, &w2) + nu).abs() < 0.01 * nu);
    assert!(w2[0] < 0.0);
    // Truncation-order check.
    let f4 = frobenius_series(&p, &s, 2.0, 4).unwrap();
    let s0 = 1e-3;
    let (a, b) = (fs.phi_s1_scaled(s0), f4.phi_s1_scaled(s0));
    let tail: f64 = (4..8).map(|m| (fs.p_matrices[m][0][0].abs() + fs.p_matrices[m][1][0].abs()) * s0.powi(m as i32 - 4)).sum();
    let diff = (a[0] - b[0]).abs() + (a[1] - b[1]).abs();
    let roundoff = 64.0 * f64::EPSILON * (a[0].abs() + a[1].abs());
    assert!(diff <= 2.0 * tail * s0.powi(5) + roundoff, "{diff} vs {}", tail * s0.powi(5));
    // Residual order: log-log slope ≥ K − 0.5.
    let rs: Vec<f64> = ss.iter().map(|&x| fs.residual(x)).collect();
    assert!(fit_exponent(&ss, &rs) >= 7.5);
    let sys = assemble_system(&p, &s, 2.0).unwrap();
    assert!(fs.direct_residual(&sys, 1e-3).unwrap() < 1e-12);
    assert!(fs.direct_residual(&sys, 0.05).unwrap() < 1e-6);
    // Integer ν: the second solution needs the logarithmic term.
    let gp = GasParameters::new(1.5, 1.0, 1.0).unwrap();
    let p2 = Arc::new(build_equilibrium(gp, Arc::new(Isentropic::new(0.0)), 1.0).unwrap());
    assert!(matches!(frobenius_series(&p2, &s, 2.0, 8), Err(Error::ResonanceUnhandled { .. })));
    assert!(dispersion_value(&p2, &s, 2.0, 0.5).unwrap().is_finite());
}

#[test]
fn regular_integration() {
    let (p, s) = (stable(), spec());
    let sys = assemble_system(&p, &s, 0.5).unwrap();
    let y = integrate_regular(&sys, 1e-14).unwrap();
    assert!(y[0].abs() < 1e-9 && (y[1] - 1.0).abs() < 1e-9);
    let y = integrate_regular(&sys, 0.7).unwrap();
    let y2 = integrate_between(&sys, 0.0, [0.0, 2.0], 0.7).unwrap();
    assert!((y2[0] - 2.0 * y[0]).abs() <= 1e-12 * y[0].abs() && (y2[1] - 2.0 * y[1]).abs() <= 1e-12 * y[1].abs());
    // Round trip in the oscillatory regime (λ above l²c², no evanescent growth).
    let sys = assemble_system(&p, &s, 20.0).unwrap();
    let y = integrate_regular(&sys, 0.7).unwrap();
    let back = integrate_between(&sys, 0.7, y, 0.0).unwrap();
    assert!(back[0].abs() < 1e-8 && (back[1] - 1.0).abs() < 1e-8, "{back:?}");
}

#[test]
fn dispersion_roots_match_fixed_points() {
    let (p, s) = (stable(), spec());
    let opts = SpectrumOptions::default();
    let l0 = default_lambda0(&p, &s);
    let g: Vec<f64> = solve_gmodes(&p, &s, 1..=6, l0, &opts).unwrap().into_iter().map(|r| r.unwrap().lambda).collect();
    // Window containing λ_{−1..−5} and nothing below λ_{−6}.
    let lo = 0.5 * (g[4] + g[5]);
    let scan = scan_and_refine(&p, &s, (lo, l0), 64).unwrap();
    let roots = scan.root_values();
    assert_eq!(roots.len(), 5, "{roots:?}");
    for (r, want) in roots.iter().rev().zip(&g) {
        assert!(rel(*r, *want) < 1e-5, "{r} vs {want}");
    }
    for r in &scan.roots {
        assert!(r.simple);
    }
    assert!(roots.windows(2).all(|w| w[1] - w[0] > 1e-10));
    // p-branch.
    let mu0 = default_mu0(&p, &s).unwrap();
    let pm: Vec<f64> = solve_pmodes(&p, &s, 1..=4, mu0, &opts).unwrap().into_iter().map(|r| r.unwrap().lambda).collect();
    let lg = s.l * p.params.g;
    let hi = 0.5 * (pm[3] + solve_pmodes(&p, &s, 5..=5, mu0, &opts).unwrap()[0].as_ref().unwrap().lambda);
    let scan = scan_and_refine(&p, &s, (1.1 * lg, hi), 48).unwrap();
    let roots = scan.root_values();
    let want: Vec<f64> = pm.iter().copied().filter(|&x| x > 1.1 * lg).collect();
    assert_eq!(roots.len(), want.len(), "{roots:?} vs {want:?}");
    for (r, w) in roots.iter().zip(&want) {
        assert!(rel(*r, *w) < 1e-5, "{r} vs {w}");
    }
    // D keeps its sign strictly between consecutive roots.
    let mid = 0.5 * (roots[0] + roots[1]);
    let signs: Vec<bool> = (0..5).map(|k| dispersion_value(&p, &s, mid + (k as f64 - 2.0) * 0.05 * (roots[1] - roots[0]), 0.5).unwrap() > 0.0).collect();
    assert!(signs.iter().all(|&b| b == signs[0]));
}

#[test]
fn matching_point_independence_and_skip() {
    let (p, s) = (stable(), spec());
    let lg = s.l * p.params.g;
    let scans: Vec<Vec<f64>> =
        [1.0 / 3.0, 0.5, 2.0 / 3.0].iter().map(|&zm| scan_with(&p, &s, (0.02, 0.9 * lg), 32, zm).unwrap().root_values()).collect();
    assert!(!scans[0].is_empty());
    for other in &scans[1..] {
        assert_eq!(other.len(), scans[0].len());
        for (a, b) in other.iter().zip(&scans[0]) {
            assert!(rel(*a, *b) < 1e-9, "{a} vs {b}");
        }
    }
    assert!(matches!(dispersion_value(&p, &s, lg, 0.5), Err(Error::SkipPoint { .. })));
    let scan = scan_and_refine(&p, &s, (0.9 * lg, 1.1 * lg), 16).unwrap();
    assert_eq!(scan.skipped.len(), 1);
    assert!(scan.lambda_grid.iter().all(|&x| (x - lg).abs() > 1e-6 * lg));
    assert!(scan_and_refine(&p, &s, (-1.0, 1.0), 32).is_err());
    assert!(matches!(scan_and_refine(&p, &s, (1.0, 2.0), 8), Err(Error::GridTooCoarse { .. })));
}

#[test]
fn isentropic_gravity_branch_is_empty() {
    let (i, s) = (iso(), spec());
    let scan = scan_and_refine(&i, &s, (1e-3, 0.9 * s.l), 48).unwrap();
    assert!(scan.roots.is_empty(), "{:?}", scan.root_values());
}

#[test]
fn reconstructed_first_gmode() {
    let (p, s) = (stable(), spec());
    let lg = s.l * p.params.g;
    let scan = scan_and_refine(&p, &s, (0.05, 0.9 * lg), 24).unwrap();
    let lam = *scan.root_values().last().unwrap();
    let m = reconstruct_eigenfunction(&p, &s, lam).unwrap();
    // The Robin ground shifts labels by one (n₀ = 2): the first g-mode is the
    // second eigenfunction of the gravity problem, and w has a single node
    // just below the vacuum.
    assert_eq!(sign_changes(&m.w), 1);
    let node = m.w.windows(2).position(|p| p[0] * p[1] < 0.0).unwrap();
    assert!(m.z[node] > 0.98, "{}", m.z[node]);
    assert!(m.w[0].abs() < 1e-10);
    assert!((m.alpha - 1.0).abs() < 1e-12);
    assert!(m.u_trace.is_finite());
    assert!(m.residual < 1e-5, "{}", m.residual);
    let nu = p.nu();
    let n = m.s.len();
    let idx: Vec<usize> = (n - 60..n - 1).collect();
    let ss: Vec<f64> = idx.iter().map(|&j| m.s[j]).collect();
    let eta: Vec<f64> = idx.iter().map(|&j| m.eta[j]).collect();
    let e = fit_exponent(&ss, &eta);
    assert!((e - (nu + 1.0)).abs() < 0.05 * (nu + 1.0), "{e}");
    // u = −(1/l)(η/(c²ρ) + dw/dz) in the interior.
    let wz = crate::grid::DiffOperator::new(&m.z, 7).unwrap().apply(&m.w);
    for j in (50..n - 50).step_by(97) {
        let f = p.eval(m.z[j]).unwrap();
        let alt = -(m.eta[j] / (f.c2 * f.rho) + wz[j]) / s.l;
        assert!((alt - m.u[j]).abs() < 1e-6 * (1.0 + m.u[j].abs()), "{alt} vs {}", m.u[j]);
    }
    // A non-root fails to glue.
    assert!(matches!(reconstruct_eigenfunction(&p, &s, 1.03 * lam), Err(Error::GlueMismatch { .. })));
}

#[test]
fn operator_and_kernel() {
    let (i, s) = (iso(), spec());
    let z = crate::grid::Grid::graded(1.0, 4000).z;
    let zero = vec![0.0; z.len()];
    let (a, b) = apply_operator(&i, &s, &z, &zero, &zero).unwrap();
    assert!(a.iter().chain(&b).all(|v| *v == 0.0));
    assert!(matches!(apply_operator(&i, &s, &z[..4], &zero[..4], &zero[..4]), Err(Error::GridTooCoarse { .. })));
    let bump = |x: f64| -> (f64, f64) {
        let r = (x - 0.5) / 0.45;
        if r.abs() >= 1.0 {
            return (0.0, 0.0);
        }
        let e = (-1.0 / (1.0 - r * r)).exp();
        (e, e * (-2.0 * r / (1.0 - r * r).powi(2)) / 0.45)
    };
    let (u, w) = kernel_family_isentropic(&i, &s, &z, bump).unwrap();
    let (lu, lw) = apply_operator(&i, &s, &z, &u, &w).unwrap();
    let rho: Vec<f64> = z.iter().map(|&x| if x < 1.0 { i.eval(x).unwrap().rho } else { 0.0 }).collect();
    let num = (weighted_inner(&z, &rho, &lu, &lu) + weighted_inner(&z, &rho, &lw, &lw)).sqrt();
    let den = (weighted_inner(&z, &rho, &u, &u) + weighted_inner(&z, &rho, &w, &w)).sqrt();
    assert!(num / den < 1e-6, "{}", num / den);
    let (u0, w0) = kernel_family_isentropic(&i, &s, &z, |_| (0.0, 0.0)).unwrap();
    assert!(u0.iter().chain(&w0).all(|v| *v == 0.0));
    assert!(matches!(kernel_family_isentropic(&*stable(), &s, &z, bump), Err(Error::NotIsentropic { .. })));
}

#[test]
fn resolvent_properties() {
    let (p, s) = (stable(), spec());
    let lg = s.l * p.params.g;
    let scan = scan_and_refine(&p, &s, (1.1 * lg, 40.0), 32).unwrap();
    let lstar = scan.roots[0].lambda;
    let m = reconstruct_eigenfunction(&p, &s, lstar).unwrap();
    // Zero forcing.
    let zf = Forcing::sample(&*p, 2000, |_| (0.0, 0.0));
    let r = resolvent_solve(&p, &s, 3.0, &zf).unwrap();
    assert!(r.solution.w.iter().chain(&r.solution.u).all(|v| *v == 0.0));
    // One-mode forcing: (L − λ)⁻¹ φ = φ/(λ* − λ).
    let f = Forcing { z: m.z.clone(), fu: m.u.clone(), fw: m.w.clone() };
    for lam in [3.0, 0.5 * lstar, 1.5 * lstar] {
        let r = resolvent_solve(&p, &s, lam, &f).unwrap();
        assert!(r.solution.residual < 1e-6, "{}", r.solution.residual);
        let want = 1.0 / (lstar - lam).abs();
        assert!(rel(r.norm_ratio, want) < 0.1, "{} vs {want}", r.norm_ratio);
    }
    assert!(matches!(resolvent_solve(&p, &s, lstar * (1.0 + 1e-11), &f), Err(Error::NearEigenvalue { .. })));
    // Random smooth forcings at several off-spectrum λ.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let lams = [0.3, 1.7, 4.0, 12.0, 0.5 * (scan.roots[0].lambda + scan.roots[1].lambda)];
    let cases: Vec<(f64, [f64; 6])> =
        (0..50).map(|k| (lams[k % 5], std::array::from_fn(|_| rng.gen_range(-1.0..1.0)))).collect();
    use rayon::prelude::*;
    let results: Vec<(f64, f64, f64)> = cases
        .par_iter()
        .map(|(lam, c)| {
            let f = Forcing::sample(&*p, 2000, |z| {
                let pi = std::f64::consts::PI;
                (c[0] + c[1] * (pi * z).cos() + c[2] * (2.0 * pi * z).cos(), c[3] * (pi * z).sin() + c[4] * z + c[5] * z * z)
            });
            let r = resolvent_solve(&p, &s, *lam, &f).unwrap();
            let n = r.solution.s.len();
            let ss = &r.solution.s[n - 40..n - 1];
            let w_exp = fit_exponent(ss, &r.solution.w[n - 40..n - 1]);
            let eta_exp = fit_exponent(ss, &r.solution.eta[n - 40..n - 1]);
            (r.solution.residual, w_exp, eta_exp)
        })
        .collect();
    let nu = p.nu();
    for (res, we, ee) in results {
        assert!(res < 1e-6, "{res}");
        assert!(we >= (1.0 - nu) / 2.0 - 0.05 && ee >= (nu + 1.0) / 2.0 - 0.05, "{we} {ee}");
    }
}

#[test]
fn eigenfunctions_orthogonal_and_projection_monotone() {
    let (p, s) = (stable(), spec());
    let lg = s.l * p.params.g;
    let mut roots = scan_and_refine(&p, &s, (0.012, 0.9 * lg), 48).unwrap().root_values();
    roots.extend(scan_and_refine(&p, &s, (1.1 * lg, 160.0), 64).unwrap().root_values());
    assert!(roots.len() >= 15, "{}", roots.len());
    use rayon::prelude::*;
    let modes: Vec<ModeFunction<f64>> = roots[..15].par_iter().map(|&l| reconstruct_eigenfunction(&p, &s, l).unwrap()).collect();
    let z = &modes[0].z;
    let rho: Vec<f64> = modes[0].s.iter().map(|&x| if x > 0.0 { p.eval_depth(x).unwrap().rho } else { 0.0 }).collect();
    let ip = |a: (&[f64], &[f64]), b: (&[f64], &[f64])| weighted_inner(z, &rho, a.0, b.0) + weighted_inner(z, &rho, a.1, b.1);
    for i in 0..15 {
        for j in 0..i {
            let (a, b) = (&modes[i], &modes[j]);
            let c = ip((&a.u, &a.w), (&b.u, &b.w)) / (ip((&a.u, &a.w), (&a.u, &a.w)) * ip((&b.u, &b.w), (&b.u, &b.w))).sqrt();
            assert!(c.abs() < 1e-4, "modes {i},{j}: {c}");
        }
    }
    // Captured fraction of a smooth field.
    let fu: Vec<f64> = z.iter().map(|x| (3.0 * x).sin()).collect();
    let fw: Vec<f64> = z.iter().map(|x| x * (1.0 - x) + 0.3).collect();
    let total = ip((&fu, &fw), (&fu, &fw));
    let mut basis: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    let mut fractions = Vec::new();
    for m in &modes {
        let (mut u, mut w) = (m.u.clone(), m.w.clone());
        for (bu, bw) in &basis {
            let c = ip((&u, &w), (bu, bw));
            for k in 0..u.len() {
                u[k] -= c * bu[k];
                w[k] -= c * bw[k];
            }
        }
        let nrm = ip((&u, &w), (&u, &w)).sqrt();
        u.iter_mut().chain(w.iter_mut()).for_each(|v| *v /= nrm);
        basis.push((u, w));
        let cap: f64 = basis.iter().map(|(bu, bw)| ip((&fu, &fw), (bu, bw)).powi(2)).sum();
        fractions.push(cap / total);
    }
    assert!(fractions.windows(2).all(|f| f[1] >= f[0] - 1e-12));
    assert!(*fractions.last().unwrap() <= 1.0 + 1e-9);
}
