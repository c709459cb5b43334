use super::*;
use crate::equilibrium::{reference_isentropic, reference_stable};

fn stable() -> Arc<EquilibriumProfile<f64>> {
    Arc::new(reference_stable())
}

fn spec(branch: Branch) -> ModeSpec<f64> {
    ModeSpec::harmonic(1, 1.0, branch).unwrap()
}

fn shooting(ground: GroundCondition) -> SpectrumOptions<f64> {
    SpectrumOptions { method: SpectrumMethod::Shooting, ..SpectrumOptions::with_ground(ground) }
}

#[test]
fn mode_spec_period_condition() {
    assert!(ModeSpec::new(2.0 * std::f64::consts::PI, 1.0, None, Branch::G).is_ok());
    assert!(matches!(ModeSpec::new(1.0, 1.0, None, Branch::G), Err(Error::PeriodMismatch { .. })));
    assert!(ModeSpec::new(-1.0, 1.0, None, Branch::G).is_err());
}

#[test]
fn g_spectrum_oracle_vs_shooting() {
    let (p, s) = (stable(), spec(Branch::G));
    for ground in [GroundCondition::Physical, GroundCondition::Dirichlet] {
        let fd = g_weighted_spectrum(&p, &s, 0.0, 3, &SpectrumOptions::with_ground(ground)).unwrap();
        let sh = g_weighted_spectrum(&p, &s, 0.0, 3, &shooting(ground)).unwrap();
        assert!(fd.windows(2).all(|w| w[1] > w[0]) && fd[0] > 0.0);
        for (a, b) in fd.iter().zip(&sh) {
            assert!((a - b).abs() / b < 1e-5, "{a} vs {b}");
        }
    }
}

#[test]
fn g_spectrum_requires_stability() {
    let iso = Arc::new(reference_isentropic::<f64>());
    let r = g_weighted_spectrum(&iso, &spec(Branch::G), 0.0, 3, &SpectrumOptions::default());
    assert!(matches!(r, Err(Error::StabilityViolated { .. })));
    let r = g_weighted_spectrum(&stable(), &spec(Branch::G), 7.0, 3, &SpectrumOptions::default());
    assert!(matches!(r, Err(Error::ParameterOutOfRange { .. })));
}

#[test]
fn g_spectrum_decreases_with_lambda_dirichlet() {
    let (p, s) = (stable(), spec(Branch::G));
    let opts = SpectrumOptions::with_ground(GroundCondition::Dirichlet);
    let l0 = default_lambda0(&p, &s);
    let a = g_weighted_spectrum(&p, &s, 0.0, 4, &opts).unwrap();
    let b = g_weighted_spectrum(&p, &s, l0, 4, &opts).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!(y <= x);
    }
    let grid: Vec<f64> = (0..32).map(|i| l0 * i as f64 / 31.0).collect();
    let sw = parameter_sweep(&p, &s, &grid, 4, &opts).unwrap();
    for k in 0..4 {
        for i in 1..32 {
            assert!(sw.spectra[i][k] <= sw.spectra[i - 1][k] + 1e-9);
        }
    }
    // Continuity: no jump beyond 1.5 × Lipschitz × spacing.
    let dp = grid[1] - grid[0];
    for k in 0..4 {
        for i in 1..32 {
            assert!((sw.spectra[i][k] - sw.spectra[i - 1][k]).abs() <= 1.5 * sw.lipschitz_estimate * dp);
        }
    }
}

#[test]
fn gmodes_stable_reference() {
    let (p, s) = (stable(), spec(Branch::G));
    let l0 = default_lambda0(&p, &s);
    let opts = SpectrumOptions::default();
    let res: Vec<FixedPointResult<f64>> = solve_gmodes(&p, &s, 1..=8, l0, &opts).unwrap().into_iter().map(|r| r.unwrap()).collect();
    assert_eq!(res.len(), 8);
    for r in &res {
        assert!(r.f_residual < 1e-8);
        assert!(r.lambda > 0.0 && r.lambda < l0);
        assert_eq!(r.raw_index, r.n + 1);
    }
    assert!(res.windows(2).all(|w| w[1].lambda < w[0].lambda));
    // Root independence of λ₀.
    let half = solve_gmodes(&p, &s, 1..=8, 0.5 * l0, &opts).unwrap();
    for (a, b) in res.iter().zip(&half) {
        let b = b.as_ref().unwrap();
        assert!((a.lambda - b.lambda).abs() < 1e-7);
    }
    // The first label has a root near the Dirichlet-prototype value.
    assert!((res[0].lambda - 0.0722).abs() < 1e-3, "{}", res[0].lambda);
}

#[test]
fn labels_independent_of_lambda0_near_limit() {
    let (p, s) = (stable(), spec(Branch::G));
    let lg = lambda_limit(&p, &s);
    let opts = SpectrumOptions::default();
    let near = solve_gmodes(&p, &s, 1..=2, 0.9995 * lg, &opts).unwrap();
    let base = solve_gmodes(&p, &s, 1..=2, default_lambda0(&p, &s), &opts).unwrap();
    for (a, b) in near.iter().zip(&base) {
        let (a, b) = (a.as_ref().unwrap(), b.as_ref().unwrap());
        assert_eq!(a.raw_index, b.raw_index);
        assert!((a.lambda - b.lambda).abs() < 1e-7 * b.lambda);
    }
    // The bound-state branch has its own fixed point just below l·g (label 0).
    let k1: Vec<f64> = (0..40).map(|i| 0.95 * lg + 0.0495 * lg * i as f64 / 39.0).collect();
    let f: Vec<f64> = k1.iter().map(|&l| l * branch_values(&p, &s, l, 1, &opts).unwrap()[0] - 1.0).collect();
    assert!(f.windows(2).filter(|w| w[0] * w[1] < 0.0).count() == 1);
}

#[test]
fn gmodes_no_sign_change_for_small_lambda0() {
    let (p, s) = (stable(), spec(Branch::G));
    let r = solve_gmodes(&p, &s, 1..=1, 0.01, &SpectrumOptions::default()).unwrap();
    assert!(matches!(r[0], Err(Error::NoSignChange { .. })));
}

#[test]
fn p_spectrum_properties() {
    let (p, s) = (stable(), spec(Branch::P));
    let opts = SpectrumOptions::default();
    let fd = p_weighted_spectrum(&p, &s, 0.0, 3, &opts).unwrap();
    let sh = p_weighted_spectrum(&p, &s, 0.0, 3, &shooting(GroundCondition::Physical)).unwrap();
    for (a, b) in fd.iter().zip(&sh) {
        assert!((a - b).abs() / b < 1e-5, "{a} vs {b}");
    }
    let iso = Arc::new(reference_isentropic::<f64>());
    let dopts = SpectrumOptions::with_ground(GroundCondition::Dirichlet);
    let a = p_weighted_spectrum(&iso, &s, 0.0, 3, &dopts).unwrap();
    let b = p_weighted_spectrum(&iso, &s, 0.01, 3, &dopts).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() <= 1e-12 * x.abs());
    }
    // Lipschitz bound in μ.
    let m = p_lipschitz_bound(&p, &s).unwrap();
    let mu0 = default_mu0(&p, &s).unwrap();
    let grid: Vec<f64> = (0..8).map(|i| mu0 * i as f64 / 7.0).collect();
    let sw = parameter_sweep(&p, &s, &grid, 3, &dopts).unwrap();
    assert!(sw.lipschitz_estimate <= 1.1 * m, "{} vs {}", sw.lipschitz_estimate, m);
    let one = parameter_sweep(&p, &s, &grid[..1], 3, &opts).unwrap();
    assert_eq!(one.lipschitz_estimate, 0.0);
}

#[test]
fn pmodes_weyl_growth_and_separation() {
    let (p, s) = (stable(), spec(Branch::P));
    let mu0 = default_mu0(&p, &s).unwrap();
    let res: Vec<FixedPointResult<f64>> =
        solve_pmodes(&p, &s, 5..=12, mu0, &SpectrumOptions::default()).unwrap().into_iter().map(|r| r.unwrap()).collect();
    let lg = lambda_limit(&p, &s);
    for r in &res {
        assert!(r.f_residual < 1e-8);
        assert!(r.lambda > lg);
    }
    assert!(res.windows(2).all(|w| w[1].lambda > w[0].lambda));
    let ratio = res[7].lambda / res[1].lambda;
    assert!((ratio / 4.0 - 1.0).abs() < 0.25, "ratio {ratio}");
    let iso = Arc::new(reference_isentropic::<f64>());
    let mu0i = default_mu0(&iso, &s).unwrap();
    let r = solve_pmodes(&iso, &s, 1..=2, mu0i, &SpectrumOptions::default()).unwrap();
    assert!(r.iter().all(|x| x.is_ok()));
}

#[test]
fn gmode_accumulation_dirichlet() {
    // The variational bound λ_{−n} ≤ 1/Λ_n(λ₀) relies on Λ_n decreasing in λ,
    // which holds for the Dirichlet formulation.
    let (p, s) = (stable(), spec(Branch::G));
    let l0 = default_lambda0(&p, &s);
    let opts = SpectrumOptions::with_ground(GroundCondition::Dirichlet);
    let res: Vec<FixedPointResult<f64>> = solve_gmodes(&p, &s, 1..=8, l0, &opts).unwrap().into_iter().map(|r| r.unwrap()).collect();
    let (n0, at0) = label_shift(&p, &s, l0, 8, &opts).unwrap();
    assert_eq!(n0, 1);
    for r in &res {
        assert!(r.f_residual < 1e-8);
        assert!(r.lambda <= 1.0 / at0[r.raw_index - 1]);
    }
    assert!(at0[0] / at0[7] < 0.5);
}
