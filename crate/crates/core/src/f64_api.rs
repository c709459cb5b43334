//! The public types with the scalar fixed to `f64`.

pub type GasParameters = crate::equilibrium::GasParameters<f64>;
pub type EquilibriumProfile = crate::equilibrium::EquilibriumProfile<f64>;
pub type FieldSample = crate::equilibrium::FieldSample<f64>;
pub type ProfileTable = crate::equilibrium::ProfileTable<f64>;
pub type Isentropic = crate::equilibrium::Isentropic<f64>;
pub type LinearEntropy = crate::equilibrium::LinearEntropy<f64>;
pub type TabulatedEntropy = crate::equilibrium::TabulatedEntropy<f64>;

pub type SLProblem = crate::slcore::SLProblem<f64>;
pub type SchrodingerForm = crate::slcore::SchrodingerForm<f64>;
pub type Eigenpair = crate::slcore::Eigenpair<f64>;
pub type MeshSpec = crate::slcore::MeshSpec<f64>;
pub type ShootOptions = crate::slcore::ShootOptions<f64>;

pub type VerticalSpectrum = crate::vertical::VerticalSpectrum<f64>;
pub type VerticalMode = crate::vertical::VerticalMode<f64>;
pub type VerticalModeFunction = crate::vertical::ModeFunction<f64>;

pub type ModeSpec = crate::fixedpoint::ModeSpec<f64>;
pub type SpectrumOptions = crate::fixedpoint::SpectrumOptions<f64>;
pub type FixedPointResult = crate::fixedpoint::FixedPointResult<f64>;
pub type ParameterSweep = crate::fixedpoint::ParameterSweep<f64>;

pub type FirstOrderSystem = crate::dispersion::FirstOrderSystem<f64>;
pub type FrobeniusSeries = crate::dispersion::FrobeniusSeries<f64>;
pub type DispersionRoot = crate::dispersion::DispersionRoot<f64>;
pub type DispersionScan = crate::dispersion::DispersionScan<f64>;
pub type ModeFunction = crate::dispersion::ModeFunction<f64>;
pub type Forcing = crate::dispersion::Forcing<f64>;
pub type ResolventProblem = crate::dispersion::ResolventProblem<f64>;

pub type FieldMode = crate::wavefield::FieldMode<f64>;
pub type PerturbationField = crate::wavefield::PerturbationField<f64>;
pub type BoundarySurface = crate::wavefield::BoundarySurface<f64>;
pub type WaveResidual = crate::wavefield::WaveResidual<f64>;
