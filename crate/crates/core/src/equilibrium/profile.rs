//! Admissible equilibria: construction and field evaluation.
//!
//! With `θ = ρ^{γ-1}` and `E(θ) = exp(Σ(θ)/c_v)` the enthalpy-like map is
//! `u(θ) = ν ∫_0^θ E + θ E(θ)`, `du/dθ = E (ν + 1 + θ Σ′/c_v)`, and the profile
//! is defined by `u(θ(z)) = g (z₊ − z)`.  All fields are closed-form in `θ`:
//! `ρ = θ^ν`, `P = θ^{ν+1} E`, `c² = γ θ E`, `dθ/dz = −g / u′(θ)`.

use super::entropy::EntropyLaw;
use crate::error::{Error, Result};
use crate::real::Real;
use crate::roots::newton_increasing;
use crate::series::Series;
use std::sync::Arc;

/// Gas constants. `nu = 1/(γ-1)` is always recomputed from `gamma`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GasParameters<T> {
    pub gamma: T,
    pub c_v: T,
    pub g: T,
}

impl<T: Real> GasParameters<T> {
    /// Validated constructor (`1 < γ < 2`, `c_v > 0`, `g > 0`).
    pub fn new(gamma: T, c_v: T, g: T) -> Result<Self> {
        if !(gamma > T::one() && gamma < T::lit(2.0)) {
            return Err(Error::ParameterOutOfRange { name: "gamma", value: gamma.to_f64_lossy(), detail: "need 1 < gamma < 2".into() });
        }
        if !(c_v > T::zero()) || !c_v.is_finite() {
            return Err(Error::ParameterOutOfRange { name: "c_v", value: c_v.to_f64_lossy(), detail: "need c_v > 0".into() });
        }
        if !(g > T::zero()) || !g.is_finite() {
            return Err(Error::ParameterOutOfRange { name: "g", value: g.to_f64_lossy(), detail: "need g > 0".into() });
        }
        Ok(Self { gamma, c_v, g })
    }

    /// Polytropic index `ν = 1/(γ-1)`.
    pub fn nu(&self) -> T {
        T::one() / (self.gamma - T::one())
    }
}

/// Background fields at one height.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldSample<T> {
    pub z: T,
    pub rho: T,
    pub p: T,
    /// Entropy `S̄`.
    pub s: T,
    pub c2: T,
    /// Squared Brunt–Väisälä frequency `𝒩² = −g 𝒜`.
    pub n2: T,
    /// Schwarzschild discriminant `𝒜 = −(dS̄/dz)/(γ c_v)`.
    pub a_schwarz: T,
    /// Density scale height `H[ρ] = −(d log ρ/dz)^{-1}`.
    pub h_rho: T,
    pub drho_dz: T,
    pub ds_dz: T,
    /// `θ = ρ^{γ-1}`.
    pub theta: T,
}

impl<T: Real> FieldSample<T> {
    /// `𝒩²` by the alternative route `−g²/c² + g/H[ρ]`.
    pub fn n2_via_scale_height(&self, g: T) -> T {
        -g * g / self.c2 + g / self.h_rho
    }
}

/// Truncated Taylor expansions of background fields about a height `z0`,
/// in powers of `δ = z − z0`.
#[derive(Clone, Debug)]
pub struct LocalSeries<T> {
    pub z0: T,
    pub rho: Series<T>,
    pub p: Series<T>,
    pub s: Series<T>,
    pub c2: Series<T>,
    pub n2: Series<T>,
}

/// Expansions at the vacuum boundary in powers of the depth `s = z₊ − z`:
/// `θ = s·θ̂(s)`, `ρ = s^ν ρ̂(s)`, `c² = s ĉ(s)`.
#[derive(Clone, Debug)]
pub struct VacuumSeries<T> {
    pub theta_hat: Series<T>,
    pub rho_hat: Series<T>,
    pub c2_hat: Series<T>,
    pub sigma: Series<T>,
}

/// An admissible equilibrium, stored as an analytic-in-u evaluator.
#[derive(Clone, Debug)]
pub struct EquilibriumProfile<T: Real> {
    pub params: GasParameters<T>,
    pub law: Arc<dyn EntropyLaw<T>>,
    pub z_plus: T,
    /// `C_ρ = lim ρ/(z₊−z)^ν`.
    pub c_rho: T,
    /// `θ` at the ground `z = 0`.
    pub theta_ground: T,
    guess: Series<T>,
}

/// Number of points of the logarithmic validation grid for the positivity condition.
pub const VALIDATION_POINTS: usize = 1024;

/// Build the equilibrium for `law` with vacuum height `z_plus`.
pub fn build_equilibrium<T: Real>(params: GasParameters<T>, law: Arc<dyn EntropyLaw<T>>, z_plus: T) -> Result<EquilibriumProfile<T>> {
    let params = GasParameters::new(params.gamma, params.c_v, params.g)?;
    if !(z_plus > T::zero()) || !z_plus.is_finite() {
        return Err(Error::ParameterOutOfRange { name: "z_plus", value: z_plus.to_f64_lossy(), detail: "need z_plus > 0".into() });
    }
    let mut prof = EquilibriumProfile {
        params,
        law,
        z_plus,
        c_rho: T::zero(),
        theta_ground: T::zero(),
        guess: Series::constant(T::zero(), 0),
    };
    let target = params.g * z_plus;
    // Bracket θ_ground by doubling.
    let d0 = prof.du_dtheta(T::zero());
    if !(d0 > T::zero()) {
        return Err(Error::EntropyConditionViolated { eta: 0.0, value: d0.to_f64_lossy() });
    }
    let mut hi = target / d0;
    let eta_max = prof.law.eta_max();
    let mut iters = 0;
    while prof.u_of_theta(hi).0 < target {
        let slope = prof.du_dtheta(hi);
        if !(slope > T::zero()) {
            let gm1 = params.gamma - T::one();
            let v = params.gamma + gm1 / params.c_v * hi * prof.law.sigma_prime(hi);
            return Err(Error::EntropyConditionViolated { eta: hi.to_f64_lossy(), value: v.to_f64_lossy() });
        }
        hi = hi * T::lit(2.0);
        iters += 1;
        if hi > eta_max {
            hi = eta_max;
            if prof.u_of_theta(hi).0 < target {
                return Err(Error::InversionFailure(format!(
                    "entropy law range [0, {}] does not reach the ground value u = g z_plus = {}",
                    eta_max, target
                )));
            }
            break;
        }
        if iters > 400 || !hi.is_finite() {
            return Err(Error::InversionFailure("could not bracket theta at the ground".into()));
        }
    }
    // Positivity condition on a logarithmic grid of (0, hi].
    validate_positivity(&params, prof.law.as_ref(), hi)?;
    let rtol = T::floor_tol(T::lit(1e-15));
    let theta_ground = newton_increasing(|t| prof.u_of_theta(t), target, T::zero(), hi, hi * T::lit(0.5), rtol, 500)?;
    validate_positivity(&params, prof.law.as_ref(), theta_ground)?;
    prof.theta_ground = theta_ground;
    let vs = prof.vacuum_series(8);
    prof.c_rho = vs.rho_hat.value();
    prof.guess = vs.theta_hat;
    // Self-check of the inversion at a few depths (relative residual of u).
    for k in 1..=8 {
        let s = z_plus * T::lit(10f64.powi(-(k as i32)));
        let th = prof.theta_at_depth(s)?;
        let (u, _) = prof.u_of_theta(th);
        let rel = ((u - params.g * s) / (params.g * s)).abs();
        if rel > T::floor_tol(T::lit(1e-13)) {
            return Err(Error::InversionFailure(format!("relative residual {:e} at depth {}", rel.to_f64_lossy(), s)));
        }
    }
    Ok(prof)
}

fn validate_positivity<T: Real>(params: &GasParameters<T>, law: &dyn EntropyLaw<T>, eta_hi: T) -> Result<()> {
    let gm1 = params.gamma - T::one();
    let lo = eta_hi * T::lit(1e-12);
    let ratio = (eta_hi / lo).ln();
    for i in 0..VALIDATION_POINTS {
        let eta = lo * (ratio * T::from_count(i) / T::from_count(VALIDATION_POINTS - 1)).exp();
        let v = params.gamma + gm1 / params.c_v * eta * law.sigma_prime(eta);
        if !(v > T::zero()) {
            return Err(Error::EntropyConditionViolated { eta: eta.to_f64_lossy(), value: v.to_f64_lossy() });
        }
    }
    Ok(())
}

impl<T: Real> EquilibriumProfile<T> {
    pub fn nu(&self) -> T {
        self.params.nu()
    }

    /// `E(θ) = exp(Σ(θ)/c_v)`.
    pub fn e_of_theta(&self, theta: T) -> T {
        (self.law.sigma(theta) / self.params.c_v).exp()
    }

    /// `u′(θ) = E (ν + 1 + θ Σ′/c_v)`.
    pub fn du_dtheta(&self, theta: T) -> T {
        let cv = self.params.c_v;
        self.e_of_theta(theta) * (self.nu() + T::one() + theta * self.law.sigma_prime(theta) / cv)
    }

    /// `(u(θ), u′(θ))`.
    pub fn u_of_theta(&self, theta: T) -> (T, T) {
        let cv = self.params.c_v;
        let e = self.e_of_theta(theta);
        let u = self.nu() * self.law.exp_integral(theta, cv) + theta * e;
        (u, e * (self.nu() + T::one() + theta * self.law.sigma_prime(theta) / cv))
    }

    /// `θ` at depth `s = z₊ − z` (relative accuracy ~1e-15 at any depth).
    pub fn theta_at_depth(&self, s: T) -> Result<T> {
        if s <= T::zero() {
            return Ok(T::zero());
        }
        let target = self.params.g * s;
        let guess = s * self.guess.eval(s);
        let hi = self.theta_ground * (T::one() + T::lit(1e-9)) + T::min_positive_value();
        let rtol = T::floor_tol(T::lit(1e-15));
        newton_increasing(|t| self.u_of_theta(t), target, T::zero(), hi, guess, rtol, 500)
    }

    /// Fields at height `z ∈ [0, z₊)`.
    pub fn eval(&self, z: T) -> Result<FieldSample<T>> {
        if !(z >= T::zero() && z < self.z_plus) {
            return Err(Error::OutOfDomain { z: z.to_f64_lossy(), z_plus: self.z_plus.to_f64_lossy() });
        }
        self.eval_depth(self.z_plus - z)
    }

    /// Fields at depth `s = z₊ − z > 0` (avoids cancellation near the vacuum).
    pub fn eval_depth(&self, s: T) -> Result<FieldSample<T>> {
        if !(s > T::zero() && s <= self.z_plus) {
            return Err(Error::OutOfDomain { z: (self.z_plus - s).to_f64_lossy(), z_plus: self.z_plus.to_f64_lossy() });
        }
        let th = self.theta_at_depth(s)?;
        Ok(self.fields_from_theta(self.z_plus - s, th))
    }

    fn fields_from_theta(&self, z: T, th: T) -> FieldSample<T> {
        let GasParameters { gamma, c_v, g } = self.params;
        let nu = self.nu();
        let e = self.e_of_theta(th);
        let sp = self.law.sigma_prime(th);
        let d = e * (nu + T::one() + th * sp / c_v);
        let th_z = -g / d;
        let rho = th.powf(nu);
        let ds_dz = sp * th_z;
        let a = -ds_dz / (gamma * c_v);
        FieldSample {
            z,
            rho,
            p: rho * th * e,
            s: self.law.sigma(th),
            c2: gamma * th * e,
            n2: -g * a,
            a_schwarz: a,
            h_rho: th * d / (nu * g),
            drho_dz: nu * rho / th * th_z,
            ds_dz,
            theta: th,
        }
    }

    /// Whether the entropy law is constant (isentropic, `𝒩² ≡ 0`).
    pub fn is_isentropic(&self) -> bool {
        self.law.is_constant()
    }

    /// Taylor expansions of the fields about `z0 ∈ [0, z₊)`, in powers of `z − z0`.
    pub fn local_series(&self, z0: T, order: usize) -> Result<LocalSeries<T>> {
        if !(z0 >= T::zero() && z0 < self.z_plus) {
            return Err(Error::OutOfDomain { z: z0.to_f64_lossy(), z_plus: self.z_plus.to_f64_lossy() });
        }
        self.local_series_depth(self.z_plus - z0, order)
    }

    /// As [`local_series`](Self::local_series) with the expansion point given by its depth.
    pub fn local_series_depth(&self, s0: T, order: usize) -> Result<LocalSeries<T>> {
        let th0 = self.theta_at_depth(s0)?;
        let GasParameters { gamma, c_v, g } = self.params;
        let nu = self.nu();
        let k = order + 1;
        let sig = self.law.sigma_series(th0, k + 1);
        let inv_cv = T::one() / c_v;
        let e = sig.scale(inv_cv).exp();
        let th = Series::variable(th0, k);
        let inner = (&th * &sig.derivative()).scale(inv_cv).add_scalar(nu + T::one());
        let up = &e.with_order(k) * &inner;
        let du = up.integral(T::zero()).with_order(k);
        let eps_u = du.revert();
        // δu = −g δz.
        let mut fac = T::one();
        let eps = Series::new(
            eps_u
                .coeffs()
                .iter()
                .map(|&c| {
                    let v = c * fac;
                    fac = fac * (-g);
                    v
                })
                .collect(),
        );
        let theta = eps.add_scalar(th0);
        let s_z = sig.with_order(k).compose(&eps);
        let e_z = s_z.scale(inv_cv).exp();
        let rho = theta.powf(nu);
        let c2 = (&theta * &e_z).scale(gamma);
        let p = &(&rho * &theta) * &e_z;
        let n2 = s_z.derivative().scale(g / (gamma * c_v));
        Ok(LocalSeries {
            z0: self.z_plus - s0,
            rho: rho.with_order(order),
            p: p.with_order(order),
            s: s_z.with_order(order),
            c2: c2.with_order(order),
            n2: n2.with_order(order),
        })
    }

    /// Expansions at the vacuum boundary in powers of depth, to `order`.
    pub fn vacuum_series(&self, order: usize) -> VacuumSeries<T> {
        let GasParameters { gamma, c_v, g } = self.params;
        let nu = self.nu();
        let k = order + 1;
        let sig = self.law.sigma_series(T::zero(), k + 1);
        let inv_cv = T::one() / c_v;
        let e = sig.scale(inv_cv).exp();
        let th = Series::variable(T::zero(), k);
        let inner = (&th * &sig.derivative()).scale(inv_cv).add_scalar(nu + T::one());
        let up = &e.with_order(k) * &inner;
        let s_of_theta = up.integral(T::zero()).with_order(k).scale(T::one() / g);
        let theta_s = s_of_theta.revert();
        let theta_hat = theta_s.shift_down();
        let sigma = sig.with_order(k).compose(&theta_s).with_order(order);
        let e_s = sigma.scale(inv_cv).exp();
        let rho_hat = theta_hat.powf(nu);
        let c2_hat = (&theta_hat * &e_s).scale(gamma);
        VacuumSeries {
            theta_hat: theta_hat.with_order(order),
            rho_hat: rho_hat.with_order(order),
            c2_hat: c2_hat.with_order(order),
            sigma,
        }
    }

    /// Minimum of `𝒩²` over `samples` log/graded points including the vacuum limit.
    pub fn n2_min(&self, samples: usize) -> Result<(T, T)> {
        let grid = crate::grid::Grid::graded(self.z_plus, samples.max(8));
        let mut best = (T::infinity(), T::zero());
        for &z in &grid.z[..grid.len() - 1] {
            let f = self.eval(z)?;
            if f.n2 < best.0 {
                best = (f.n2, z);
            }
        }
        // Vacuum limit of 𝒩²: (g/(γ c_v)) Σ′(0) θ_z(0), θ_z(0) = −g/u′(0).
        let GasParameters { gamma, c_v, g } = self.params;
        let n2_top = -g * g * self.law.sigma_prime(T::zero()) / (gamma * c_v * self.du_dtheta(T::zero()));
        if n2_top < best.0 {
            best = (n2_top, self.z_plus);
        }
        Ok(best)
    }

    /// Maximum of `l² c² 𝒩²` over the domain (the Lipschitz constant of the p-problem).
    pub fn max_l2c2n2(&self, l: T, samples: usize) -> Result<T> {
        let grid = crate::grid::Grid::graded(self.z_plus, samples.max(8));
        let mut m = T::zero();
        for &z in &grid.z[..grid.len() - 1] {
            let f = self.eval(z)?;
            m = m.max(l * l * f.c2 * f.n2);
        }
        Ok(m)
    }
}

impl<T: Real> EquilibriumProfile<T> {
    /// Short identifier of the profile: gas parameters, entropy law and height.
    pub fn id(&self) -> String {
        format!(
            "gamma={},c_v={},g={},z_plus={},law={}",
            self.params.gamma, self.params.c_v, self.params.g, self.z_plus, self.law.describe()
        )
    }
}
