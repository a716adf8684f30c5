//! Multicell massive-MIMO uplink simulator with hardware imperfection
//! models.
//!
//! The crate answers one question: what user rates does a large antenna
//! array actually deliver when its receiver hardware is imperfect — when
//! oscillators drift (variance `δ` per channel use), amplifiers and
//! converters add signal-dependent distortion (level `κ²`), and low-noise
//! amplifiers raise the noise floor (factor `ξ ≥ 1`)?
//!
//! It is organized in layers:
//!
//! - [`model`]: system dimensions, hardware profiles, scenarios (link
//!   gains, transmit powers, pilot allocation) and pilot books.
//! - [`scenario`]: a wrap-around cellular grid generator with distance
//!   path loss and log-normal shadow fading, plus CSV persistence.
//! - [`estimator`]: the linear MMSE channel estimator under phase drift,
//!   distortion and amplified noise, built on small dense Hermitian
//!   solves from [`linalg`].
//! - [`closed_form`]: analytic moments, SINR and achievable rates for
//!   maximum-ratio combining, the antenna-scaling substitutions for the
//!   imperfection levels, and the feasibility law for non-vanishing
//!   asymptotic SINR.
//! - [`monte_carlo`]: a seeded, bit-deterministic simulation oracle that
//!   re-estimates every closed-form quantity empirically.
//! - [`circuits`]: ADC/LNA/oscillator interpretations of the imperfection
//!   parameters and the resulting total-power scalings.
//!
//! All numerics are generic over the scalar precision via [`num::Real`]
//! (implemented for `f32` and `f64`); the `*64` aliases at the crate root
//! pin the default double-precision instantiation.

pub mod circuits;
pub mod closed_form;
pub mod estimator;
pub mod linalg;
pub mod model;
pub mod monte_carlo;
pub mod num;
pub mod scenario;

pub use closed_form::{
    apply_scaling, asymptotic_probe, mrc_moments, rate, rate_report, scaling_law_satisfied,
    scaling_law_satisfied_block, sinr,
};
pub use model::{dbm_per_hz_to_linear, validate, Oscillator};
pub use monte_carlo::{empirical_rate, estimate_moments, simulate_block};
pub use scenario::build_scenario;

/// Double-precision system configuration.
pub type SystemConfig64 = model::SystemConfig<f64>;
/// Double-precision hardware profile.
pub type HardwareProfile64 = model::HardwareProfile<f64>;
/// Double-precision scaling exponents.
pub type ScalingExponents64 = model::ScalingExponents<f64>;
/// Double-precision scenario.
pub type Scenario64 = model::Scenario<f64>;
/// Double-precision pilot book.
pub type PilotBook64 = model::PilotBook<f64>;
/// Double-precision grid geometry.
pub type Geometry64 = scenario::Geometry<f64>;
/// Double-precision shadow-fading law.
pub type ShadowFading64 = scenario::ShadowFading<f64>;
/// Double-precision moment set.
pub type MomentSet64 = closed_form::MomentSet<f64>;
/// Double-precision rate report.
pub type RateReport64 = closed_form::RateReport<f64>;
/// Double-precision empirical moments.
pub type EmpiricalMoments64 = monte_carlo::EmpiricalMoments<f64>;
/// Double-precision block realization.
pub type BlockRealization64 = monte_carlo::BlockRealization<f64>;
/// Double-precision ADC description.
pub type AdcSpec64 = circuits::AdcSpec<f64>;
/// Double-precision LNA description.
pub type LnaSpec64 = circuits::LnaSpec<f64>;
/// Double-precision oscillator description.
pub type LoSpec64 = circuits::LoSpec<f64>;
/// Double-precision complex scalar.
pub type C64 = num::C<f64>;
