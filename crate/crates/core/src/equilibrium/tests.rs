use super::*;
use crate::error::Error;
use proptest::prelude::*;

fn iso() -> EquilibriumProfile<f64> {
    reference_isentropic()
}
fn stable() -> EquilibriumProfile<f64> {
    reference_stable()
}

#[test]
fn isentropic_closed_form() {
    let p = iso();
    let rho0 = (2.0f64 / 7.0).powf(2.5);
    let f0 = p.eval(0.0).unwrap();
    assert!((f0.rho / rho0 - 1.0).abs() < 1e-14, "{}", f0.rho);
    assert!((f0.rho - 0.0436345).abs() < 1e-7);
    assert!((f0.c2 - 0.4).abs() < 1e-14);
    assert!((p.c_rho / rho0 - 1.0).abs() < 1e-14);
    for &z in &[0.1, 0.5, 0.9, 0.999, 1.0 - 1e-9] {
        let f = p.eval(z).unwrap();
        let exact = (0.4 * (1.0 - z) / 1.4f64).powf(2.5);
        assert!((f.rho / exact - 1.0).abs() < 1e-13, "z={z}");
        assert!(f.n2.abs() <= 1e-12 && f.a_schwarz == 0.0);
        assert!((f.c2 * 2.5 / (1.0 - z) - 1.0).abs() < 1e-12);
    }
}

#[test]
fn out_of_domain() {
    let p = iso();
    assert!(matches!(p.eval(1.0), Err(Error::OutOfDomain { .. })));
    assert!(matches!(p.eval(-0.1), Err(Error::OutOfDomain { .. })));
}

#[test]
fn stable_profile_buoyancy() {
    let p = stable();
    let h = 1e-6;
    for &z in &[0.0, 0.25, 0.5, 0.75, 0.99, 0.99999] {
        let f = p.eval(z).unwrap();
        assert!(f.n2 > 0.0 && f.ds_dz > 0.0, "z={z}");
        let alt = f.n2_via_scale_height(1.0);
        assert!(((alt - f.n2) / f.n2).abs() < 1e-8, "two-way N2 at z={z}: {} vs {}", f.n2, alt);
    }
    // Central-difference oracle for dS/dz at z = 0.5.
    let f = p.eval(0.5).unwrap();
    let ds = (p.eval(0.5 + h).unwrap().s - p.eval(0.5 - h).unwrap().s) / (2.0 * h);
    let n2_fd = ds / 1.4;
    assert!(((f.n2 - n2_fd) / f.n2).abs() < 1e-8, "{} vs {}", f.n2, n2_fd);
    // 1/H_rho against a numerical log-derivative.
    let dl = (p.eval(0.5 + h).unwrap().rho.ln() - p.eval(0.5 - h).unwrap().rho.ln()) / (2.0 * h);
    assert!(((1.0 / f.h_rho + dl) * f.h_rho).abs() < 1e-8);
    let (n2min, _) = p.n2_min(256).unwrap();
    assert!(n2min > 1e-10);
}

#[test]
fn sound_speed_near_vacuum() {
    for p in [iso(), stable()] {
        for i in 0..50 {
            let s = 0.01 * (i as f64 + 0.5) / 50.0;
            let f = p.eval_depth(s).unwrap();
            let r = f.c2 * p.nu() / (p.params.g * s);
            assert!((0.99..=1.01).contains(&r), "s={s}: {r}");
        }
    }
}

#[test]
fn hydrostatic_balance_and_monotonicity() {
    for p in [iso(), stable()] {
        let rep = check_admissible(&p);
        assert!(rep.passed(), "{:?}", rep);
        assert!(rep.hydrostatic_residual < 1e-10);
        let t = ProfileTable::sample(&p, 500).unwrap();
        assert!(t.rho.windows(2).all(|w| w[1] < w[0]));
    }
}

#[test]
fn perturbed_density_fails_monotonicity() {
    let p = iso();
    let mut t = ProfileTable::sample(&p, 1000).unwrap();
    for (z, r) in t.z.iter().zip(t.rho.iter_mut()) {
        let x = (z - 0.5) / 0.01;
        *r *= 1.0 + 0.1 * (-x * x).exp();
    }
    let rep = check_admissible_table(&t, p.nu(), p.c_rho);
    assert!(!rep.passed());
    assert!(!rep.entry("monotonicity").unwrap().passed);
}

#[test]
fn vacuum_exponent_fits() {
    for p in [iso(), stable()] {
        let (nu, c) = vacuum_exponents(&p).unwrap();
        assert!((nu - 2.5).abs() < 0.01, "{nu}");
        assert!((c / p.c_rho - 1.0).abs() < 0.01);
    }
    // Only the lower half sampled.
    let p = iso();
    let z: Vec<f64> = (0..100).map(|i| 0.5 * i as f64 / 99.0).collect();
    let rho: Vec<f64> = z.iter().map(|&z| p.eval(z).unwrap().rho).collect();
    assert!(matches!(fit_vacuum_exponents(&z, &rho, 1.0, 2.5), Err(Error::FitFailure(_))));
}

#[test]
fn c_rho_limit() {
    let p = stable();
    let s = 1e-8;
    let f = p.eval_depth(s).unwrap();
    assert!((f.rho / (p.c_rho * s.powf(2.5)) - 1.0).abs() < 1e-7);
}

#[test]
fn local_series_matches_finite_differences() {
    let p = stable();
    let z0 = 0.4;
    let ls = p.local_series(z0, 3).unwrap();
    let h = 1e-4;
    let f = |z: f64| p.eval(z).unwrap();
    let r = |z: f64| f(z).rho;
    assert!((ls.rho.coeff(0) - r(z0)).abs() < 1e-15);
    let d1 = (r(z0 + h) - r(z0 - h)) / (2.0 * h);
    let d2 = (r(z0 + h) - 2.0 * r(z0) + r(z0 - h)) / (h * h);
    assert!((ls.rho.coeff(1) - d1).abs() < 1e-8 * d1.abs());
    assert!((2.0 * ls.rho.coeff(2) - d2).abs() < 1e-5 * d2.abs());
    assert!((ls.n2.coeff(0) - f(z0).n2).abs() < 1e-12);
    assert!((ls.c2.coeff(1) - (f(z0 + h).c2 - f(z0 - h).c2) / (2.0 * h)).abs() < 1e-8);
    // Hydrostatic identity in series form: P' = −g ρ to every order.
    let dp = ls.p.derivative();
    for k in 0..3 {
        assert!((dp.coeff(k) + ls.rho.coeff(k)).abs() < 1e-12, "k={k}");
    }
}

#[test]
fn vacuum_series_matches_direct_evaluation() {
    let p = stable();
    let vs = p.vacuum_series(10);
    for &s in &[1e-4, 1e-3, 1e-2, 0.05] {
        let f = p.eval_depth(s).unwrap();
        let rho = s.powf(2.5) * vs.rho_hat.eval(s);
        let c2 = s * vs.c2_hat.eval(s);
        assert!((rho / f.rho - 1.0).abs() < 1e-12, "s={s}");
        assert!((c2 / f.c2 - 1.0).abs() < 1e-12, "s={s}");
    }
}

#[test]
fn entropy_condition_violation() {
    let gp = GasParameters::new(1.4, 1.0, 1.0).unwrap();
    let r = build_equilibrium(gp, std::sync::Arc::new(LinearEntropy::new(3.0)), 10.0);
    assert!(matches!(r, Err(Error::EntropyConditionViolated { .. })), "{r:?}");
    assert!(GasParameters::new(2.5, 1.0, 1.0).is_err());
    assert!(GasParameters::new(1.4, 1.0, -1.0).is_err());
}

#[test]
fn tabulated_law_reproduces_linear_profile() {
    let gp = GasParameters::new(1.4, 1.0, 1.0).unwrap();
    let eta: Vec<f64> = (0..=40).map(|i| i as f64 * 0.01).collect();
    let sig: Vec<f64> = eta.iter().map(|e| -0.5 * e).collect();
    let law = TabulatedEntropy::new(eta, sig, 1.0).unwrap();
    let pt = build_equilibrium(gp, std::sync::Arc::new(law), 1.0).unwrap();
    let pl = stable();
    for &z in &[0.0, 0.3, 0.9, 0.999] {
        let a = pt.eval(z).unwrap();
        let b = pl.eval(z).unwrap();
        assert!((a.rho / b.rho - 1.0).abs() < 1e-12);
        assert!((a.n2 / b.n2 - 1.0).abs() < 1e-10);
    }
    // Table too short to reach the ground.
    let law = TabulatedEntropy::new(vec![0.0, 0.1], vec![0.0, -0.05], 1.0).unwrap();
    assert!(matches!(build_equilibrium(gp, std::sync::Arc::new(law), 1.0), Err(Error::InversionFailure(_))));
}

#[test]
fn single_precision_build() {
    let p: EquilibriumProfile<f32> = reference_stable();
    let f = p.eval(0.5).unwrap();
    let d = stable().eval(0.5).unwrap();
    assert!((f.rho as f64 / d.rho - 1.0).abs() < 1e-5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn random_linear_profiles_are_admissible(gamma in 1.1f64..1.9, beta in 0.0f64..1.0, zp in 0.5f64..2.0) {
        let gp = GasParameters::new(gamma, 1.0, 1.0).unwrap();
        let p = match build_equilibrium(gp, std::sync::Arc::new(LinearEntropy::new(beta)), zp) {
            Ok(p) => p,
            Err(Error::EntropyConditionViolated { eta, .. }) => {
                // Genuine violation: gamma - (gamma - 1) beta eta <= 0 at the reported point.
                prop_assert!(gamma - (gamma - 1.0) * beta * eta <= 0.0);
                return Ok(());
            }
            Err(e) => panic!("{e}"),
        };
        let t = ProfileTable::sample(&p, 400).unwrap();
        prop_assert!(t.rho.windows(2).all(|w| w[1] < w[0]));
        prop_assert!(hydrostatic_residual_series(&p, &t.z) < 1e-10);
        prop_assert!(hydrostatic_residual(&t) < 1e-5);
        for &z in &[0.0, 0.3 * zp, 0.8 * zp] {
            let f = p.eval(z).unwrap();
            if f.n2.abs() > 1e-12 {
                prop_assert!(((f.n2_via_scale_height(1.0) - f.n2) / f.n2).abs() < 1e-8);
            }
        }
    }
}
