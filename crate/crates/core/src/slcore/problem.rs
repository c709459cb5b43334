//! Weighted Sturm–Liouville problems `−(a w′)′ + b w = Λ κ w` on `(0, L)`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::real::Real;

/// Value and first two derivatives (with respect to `z`) of a coefficient.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet<T> {
    pub v: T,
    pub d1: T,
    pub d2: T,
}

impl<T: Real> Jet<T> {
    pub fn new(v: T, d1: T, d2: T) -> Self {
        Self { v, d1, d2 }
    }

    pub fn constant(v: T) -> Self {
        Self { v, d1: T::zero(), d2: T::zero() }
    }

    /// First and second derivative of `ln f` (`f′/f`, `(f′/f)′`).
    pub fn log_derivatives(&self) -> (T, T) {
        let l1 = self.d1 / self.v;
        (l1, self.d2 / self.v - l1 * l1)
    }
}

/// Coefficient jets at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoeffJets<T> {
    pub a: Jet<T>,
    pub b: T,
    pub kappa: Jet<T>,
}

/// Coefficient functions of a Sturm–Liouville problem.
///
/// Every evaluation receives both the height `z` and the depth `s = L − z`
/// below the right endpoint; implementations should use `s` near the
/// singular end, where `L − z` loses relative precision.
pub trait Coefficients<T: Real>: Send + Sync {
    /// `(a, b, κ)` at one point.
    fn values(&self, z: T, s: T) -> Result<(T, T, T)> {
        let j = self.jets(z, s)?;
        Ok((j.a.v, j.b, j.kappa.v))
    }

    /// Values with first and second `z`-derivatives of `a` and `κ`.
    fn jets(&self, z: T, s: T) -> Result<CoeffJets<T>>;
}

type JetFn<T> = Arc<dyn Fn(T, T) -> Jet<T> + Send + Sync>;
type ScalarFn<T> = Arc<dyn Fn(T, T) -> T + Send + Sync>;

/// Coefficients given by closures of `(z, s)`.
#[derive(Clone)]
pub struct FnCoefficients<T> {
    pub a: JetFn<T>,
    pub b: ScalarFn<T>,
    pub kappa: JetFn<T>,
}

impl<T: Real> Coefficients<T> for FnCoefficients<T> {
    fn jets(&self, z: T, s: T) -> Result<CoeffJets<T>> {
        Ok(CoeffJets { a: (self.a)(z, s), b: (self.b)(z, s), kappa: (self.kappa)(z, s) })
    }
}

/// Boundary condition at the regular endpoint `z = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LeftBoundary<T> {
    /// `w(0) = 0`.
    Dirichlet,
    /// `w′(0) = ratio · w(0)`.
    Robin { ratio: T },
}

/// Leading power behaviour of the coefficients at a singular right endpoint:
/// `a ~ s^a_power`, `b = O(s^b_power)`, `κ ~ s^kappa_power` as `s = L − z → 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SingularExponents<T> {
    pub a_power: T,
    pub b_power: T,
    pub kappa_power: T,
}

impl<T: Real> SingularExponents<T> {
    /// Exponent `r` in `ζ₊ − ζ ~ s^r`.
    pub fn zeta_rate(&self) -> T {
        (self.kappa_power - self.a_power) * T::lit(0.5) + T::one()
    }

    /// Inverse-square strength `cq = lim q·(ζ₊ − ζ)²` implied by the exponents.
    ///
    /// With `x = ζ₊ − ζ ~ s^r`, `v = (aκ)^{1/4} w` and the recessive/dominant
    /// pair `w ~ 1, s^{1−a_power}` one finds `cq = α₀(α₀ − 1)` with
    /// `α₀ = (a_power + kappa_power)/(4r)`.
    pub fn singular_strength(&self) -> Result<T> {
        let r = self.zeta_rate();
        if !(r > T::zero()) {
            return Err(Error::DivergentTransform(format!(
                "sqrt(kappa/a) ~ s^{} is not integrable at the singular end",
                ((self.kappa_power - self.a_power) * T::lit(0.5)).to_f64_lossy()
            )));
        }
        if !(self.b_power > self.a_power - T::lit(2.0)) {
            return Err(Error::InvalidInput(format!(
                "b ~ s^{} is as singular as a/s^2; only b_power > a_power - 2 is supported",
                self.b_power.to_f64_lossy()
            )));
        }
        let a0 = (self.a_power + self.kappa_power) / (T::lit(4.0) * r);
        Ok(a0 * (a0 - T::one()))
    }
}

/// Nature of the right endpoint `z = L`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RightEnd<T> {
    /// Regular endpoint with Dirichlet condition `w(L) = 0`.
    Regular,
    /// Singular (inverse-square after the Liouville transform) endpoint.
    Singular(SingularExponents<T>),
}

/// `−(a w′)′ + b w = Λ κ w` on `(0, L)`.
#[derive(Clone)]
pub struct SLProblem<T: Real> {
    pub coeffs: Arc<dyn Coefficients<T>>,
    pub length: T,
    pub left: LeftBoundary<T>,
    pub right: RightEnd<T>,
    /// Human-readable tag used in reports.
    pub label: String,
}

impl<T: Real> fmt::Debug for SLProblem<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SLProblem")
            .field("label", &self.label)
            .field("length", &self.length)
            .field("left", &self.left)
            .field("right", &self.right)
            .finish()
    }
}

impl<T: Real> SLProblem<T> {
    pub fn new(
        coeffs: Arc<dyn Coefficients<T>>,
        length: T,
        left: LeftBoundary<T>,
        right: RightEnd<T>,
        label: impl Into<String>,
    ) -> Result<Self> {
        if !(length > T::zero()) || !length.is_finite() {
            return Err(Error::InvalidInput("domain length must be positive and finite".into()));
        }
        if let RightEnd::Singular(e) = right {
            e.singular_strength()?;
        }
        Ok(Self { coeffs, length, left, right, label: label.into() })
    }

    /// `−w″ = Λ w` on `(0, L)` with Dirichlet conditions at both ends.
    pub fn dirichlet_box(length: T) -> Self {
        let one: JetFn<T> = Arc::new(|_, _| Jet::constant(T::one()));
        let coeffs = FnCoefficients { a: one.clone(), b: Arc::new(|_, _| T::zero()), kappa: one };
        Self {
            coeffs: Arc::new(coeffs),
            length,
            left: LeftBoundary::Dirichlet,
            right: RightEnd::Regular,
            label: "dirichlet-box".into(),
        }
    }

    /// Coefficient values at depth `s` (height `L − s`).
    pub fn values_at_depth(&self, s: T) -> Result<(T, T, T)> {
        self.coeffs.values(self.length - s, s)
    }

    /// Coefficient jets at depth `s`.
    pub fn jets_at_depth(&self, s: T) -> Result<CoeffJets<T>> {
        self.coeffs.jets(self.length - s, s)
    }

    /// Same problem with a different left boundary condition.
    pub fn with_left(mut self, left: LeftBoundary<T>) -> Self {
        self.left = left;
        self
    }
}
