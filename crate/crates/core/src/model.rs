//! Shared domain types: system dimensions, hardware imperfection profiles,
//! link-gain scenarios and pilot books.
//!
//! Conventions used throughout the crate:
//! * all powers are linear mW/Hz (dBm/Hz only at the configuration boundary),
//! * channel uses inside a coherence block are 1-based, `1..=block_len`,
//!   with pilots occupying `1..=pilot_len`,
//! * the additive-distortion level is stored squared (`kappa²`), matching how
//!   it enters every covariance expression.

use crate::num::{Real, C};
use thiserror::Error;

/// Static dimensions of one uplink simulation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SystemConfig<T> {
    /// Number of cells, each served by one base station.
    pub cells: usize,
    /// Users per cell; every user in a cell gets a distinct pilot.
    pub users_per_cell: usize,
    /// Base-station antennas N.
    pub antennas: usize,
    /// Coherence block length T in channel uses.
    pub block_len: usize,
    /// Pilot phase length B in channel uses.
    pub pilot_len: usize,
    /// Receiver noise floor (linear mW/Hz).
    pub noise_power: T,
}

impl<T: Real> SystemConfig<T> {
    /// Channel uses carrying payload data, `pilot_len+1..=block_len`.
    pub fn data_times(&self) -> impl Iterator<Item = usize> {
        (self.pilot_len + 1)..=self.block_len
    }
}

/// Local-oscillator architecture at the base station.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Oscillator {
    /// One common oscillator feeds all antennas: phase drift is identical
    /// across the array.
    Common,
    /// One oscillator per antenna: drifts are independent across the array.
    Separate,
}

impl Oscillator {
    pub fn label(self) -> &'static str {
        match self {
            Oscillator::Common => "clo",
            Oscillator::Separate => "slo",
        }
    }
}

impl std::fmt::Display for Oscillator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Oscillator {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, ModelError> {
        match s {
            "clo" => Ok(Oscillator::Common),
            "slo" => Ok(Oscillator::Separate),
            other => Err(ModelError::UnknownOscillator(other.to_string())),
        }
    }
}

/// Transceiver imperfection levels for one operating point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HardwareProfile<T> {
    /// Phase-drift innovation variance per channel use (rad²), `delta`.
    pub phase_drift: T,
    /// Additive distortion proportionality, squared (`kappa²`).
    pub distortion_sq: T,
    /// Receiver noise amplification factor `xi` (1 = ideal).
    pub noise_amp: T,
    pub oscillator: Oscillator,
}

impl<T: Real> HardwareProfile<T> {
    pub fn new(
        phase_drift: T,
        distortion_sq: T,
        noise_amp: T,
        oscillator: Oscillator,
    ) -> Result<Self, ModelError> {
        if !(phase_drift >= T::zero()) {
            return Err(ModelError::NegativePhaseDrift);
        }
        if !(distortion_sq >= T::zero()) {
            return Err(ModelError::NegativeDistortion);
        }
        if !(noise_amp >= T::one()) {
            return Err(ModelError::NoiseAmpBelowOne);
        }
        Ok(HardwareProfile {
            phase_drift,
            distortion_sq,
            noise_amp,
            oscillator,
        })
    }

    /// Perfect hardware: no drift, no distortion, unit noise figure.
    pub fn ideal(oscillator: Oscillator) -> Self {
        HardwareProfile {
            phase_drift: T::zero(),
            distortion_sq: T::zero(),
            noise_amp: T::one(),
            oscillator,
        }
    }

    pub fn is_ideal(&self) -> bool {
        self.phase_drift == T::zero()
            && self.distortion_sq == T::zero()
            && self.noise_amp == T::one()
    }
}

/// How imperfection levels grow with the antenna count:
/// `kappa² = kappa0²·N^t1`, `xi = xi0·N^t2`, `delta = delta0·(1 + ln N^t3)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalingExponents<T> {
    /// Exponent on the distortion level (t1).
    pub distortion_exp: T,
    /// Exponent on the noise amplification (t2).
    pub noise_amp_exp: T,
    /// Exponent on the phase-drift growth (t3).
    pub phase_drift_exp: T,
    /// Baseline `kappa0²` at N = 1.
    pub base_distortion_sq: T,
    /// Baseline `xi0` at N = 1.
    pub base_noise_amp: T,
    /// Baseline `delta0` at N = 1.
    pub base_phase_drift: T,
}

impl<T: Real> ScalingExponents<T> {
    pub fn new(
        distortion_exp: T,
        noise_amp_exp: T,
        phase_drift_exp: T,
        base_distortion_sq: T,
        base_noise_amp: T,
        base_phase_drift: T,
    ) -> Result<Self, ModelError> {
        for e in [distortion_exp, noise_amp_exp, phase_drift_exp] {
            if !(e >= T::zero()) {
                return Err(ModelError::NegativeExponent);
            }
        }
        if !(base_distortion_sq >= T::zero()) {
            return Err(ModelError::NegativeDistortion);
        }
        if !(base_noise_amp >= T::one()) {
            return Err(ModelError::NoiseAmpBelowOne);
        }
        if !(base_phase_drift >= T::zero()) {
            return Err(ModelError::NegativePhaseDrift);
        }
        Ok(ScalingExponents {
            distortion_exp,
            noise_amp_exp,
            phase_drift_exp,
            base_distortion_sq,
            base_noise_amp,
            base_phase_drift,
        })
    }
}

/// Per-link average channel gains plus per-user transmit powers and pilot
/// assignment. `attenuation(j, l, k)` is the variance of each entry of the
/// channel from user k of cell l to any antenna of base station j.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario<T> {
    cells: usize,
    users_per_cell: usize,
    /// Row-major `[bs][cell][user]`.
    lambda: Vec<T>,
    /// Row-major `[cell][user]`, linear mW/Hz.
    power: Vec<T>,
    /// Row-major `[cell][user]`, indices into a pilot book.
    pilot: Vec<usize>,
}

impl<T: Real> Scenario<T> {
    pub fn from_parts(
        cells: usize,
        users_per_cell: usize,
        lambda: Vec<T>,
        power: Vec<T>,
        pilot: Vec<usize>,
    ) -> Result<Self, ModelError> {
        if lambda.len() != cells * cells * users_per_cell
            || power.len() != cells * users_per_cell
            || pilot.len() != cells * users_per_cell
        {
            return Err(ModelError::DimensionMismatch);
        }
        Ok(Scenario {
            cells,
            users_per_cell,
            lambda,
            power,
            pilot,
        })
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn users_per_cell(&self) -> usize {
        self.users_per_cell
    }

    /// Average gain of the link (cell `l`, user `k`) -> base station `j`.
    #[inline]
    pub fn attenuation(&self, j: usize, l: usize, k: usize) -> T {
        self.lambda[(j * self.cells + l) * self.users_per_cell + k]
    }

    /// Transmit power of user `k` in cell `l` (pilot and data phases alike).
    #[inline]
    pub fn tx_power(&self, l: usize, k: usize) -> T {
        self.power[l * self.users_per_cell + k]
    }

    #[inline]
    pub fn pilot_of(&self, l: usize, k: usize) -> usize {
        self.pilot[l * self.users_per_cell + k]
    }

    /// Iterate over all (cell, user) pairs in row-major order.
    pub fn users(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let k = self.users_per_cell;
        (0..self.cells * k).map(move |i| (i / k, i % k))
    }
}

/// Orthogonal pilot sequences: columns of the B×B DFT matrix, unit modulus
/// entry by entry, scaled by each user's transmit amplitude on use.
#[derive(Clone, Debug)]
pub struct PilotBook<T> {
    len: usize,
    /// Row-major `[sequence][symbol]`.
    seqs: Vec<C<T>>,
}

impl<T: Real> PilotBook<T> {
    pub fn dft(len: usize) -> Self {
        assert!(len >= 1, "pilot book needs at least one symbol");
        let tau = T::lit(2.0) * T::PI();
        let step = tau / T::from_count(len);
        let mut seqs = Vec::with_capacity(len * len);
        for b in 0..len {
            for i in 0..len {
                let phase = step * T::from_count((b * i) % len);
                seqs.push(C::new(phase.cos(), phase.sin()));
            }
        }
        PilotBook { len, seqs }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn sequence(&self, idx: usize) -> &[C<T>] {
        &self.seqs[idx * self.len..(idx + 1) * self.len]
    }

    /// The pilot actually transmitted by user (l, k): its assigned sequence
    /// scaled so that every pilot symbol carries the user's data power.
    pub fn effective(&self, scenario: &Scenario<T>, l: usize, k: usize) -> Vec<C<T>> {
        let amp = scenario.tx_power(l, k).sqrt();
        self.sequence(scenario.pilot_of(l, k))
            .iter()
            .map(|x| x * amp)
            .collect()
    }
}

/// Convert a spectral density in dBm/Hz to linear mW/Hz.
pub fn dbm_per_hz_to_linear<T: Real>(dbm: T) -> T {
    T::lit(10.0).powf(dbm / T::lit(10.0))
}

/// One violated invariant found by [`validate`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ValidationIssue {
    PilotPhaseTooLong { pilot_len: usize, block_len: usize },
    PilotPhaseEmpty,
    TooManyUsersPerCell { users: usize, pilot_len: usize },
    NoAntennas,
    NoCells,
    NonPositiveNoisePower,
    ScenarioDimensionMismatch,
    NonPositiveAttenuation { bs: usize, cell: usize, user: usize },
    NonPositivePower { cell: usize, user: usize },
    PilotIndexOutOfRange { cell: usize, user: usize, index: usize },
    DuplicatePilotInCell { cell: usize, index: usize },
}

impl std::fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        use ValidationIssue::*;
        match self {
            PilotPhaseTooLong { pilot_len, block_len } => write!(
                f,
                "pilot phase ({pilot_len}) must be shorter than the coherence block ({block_len})"
            ),
            PilotPhaseEmpty => write!(f, "pilot phase must contain at least one channel use"),
            TooManyUsersPerCell { users, pilot_len } => write!(
                f,
                "{users} users per cell cannot share {pilot_len} orthogonal pilots"
            ),
            NoAntennas => write!(f, "antenna count must be at least 1"),
            NoCells => write!(f, "cell count must be at least 1"),
            NonPositiveNoisePower => write!(f, "noise power must be positive"),
            ScenarioDimensionMismatch => {
                write!(f, "scenario dimensions do not match the system config")
            }
            NonPositiveAttenuation { bs, cell, user } => write!(
                f,
                "attenuation for link ({cell},{user})->bs {bs} must be positive and finite"
            ),
            NonPositivePower { cell, user } => {
                write!(f, "transmit power of user ({cell},{user}) must be positive")
            }
            PilotIndexOutOfRange { cell, user, index } => write!(
                f,
                "pilot index {index} of user ({cell},{user}) exceeds the pilot book"
            ),
            DuplicatePilotInCell { cell, index } => {
                write!(f, "pilot {index} is assigned twice inside cell {cell}")
            }
        }
    }
}

/// Check every invariant of a (config, scenario) pair and report all
/// violations; an empty vector means the pair is consistent.
pub fn validate<T: Real>(config: &SystemConfig<T>, scenario: &Scenario<T>) -> Vec<ValidationIssue> {
    let mut issues = Vec::new();
    if config.pilot_len == 0 {
        issues.push(ValidationIssue::PilotPhaseEmpty);
    }
    if config.pilot_len >= config.block_len {
        issues.push(ValidationIssue::PilotPhaseTooLong {
            pilot_len: config.pilot_len,
            block_len: config.block_len,
        });
    }
    if config.users_per_cell > config.pilot_len {
        issues.push(ValidationIssue::TooManyUsersPerCell {
            users: config.users_per_cell,
            pilot_len: config.pilot_len,
        });
    }
    if config.antennas == 0 {
        issues.push(ValidationIssue::NoAntennas);
    }
    if config.cells == 0 {
        issues.push(ValidationIssue::NoCells);
    }
    if !(config.noise_power > T::zero()) {
        issues.push(ValidationIssue::NonPositiveNoisePower);
    }
    if scenario.cells() != config.cells || scenario.users_per_cell() != config.users_per_cell {
        issues.push(ValidationIssue::ScenarioDimensionMismatch);
        return issues; // index checks below assume matching dimensions
    }
    for j in 0..config.cells {
        for (l, k) in scenario.users() {
            let lam = scenario.attenuation(j, l, k);
            if !(lam > T::zero()) || !lam.is_finite() {
                issues.push(ValidationIssue::NonPositiveAttenuation { bs: j, cell: l, user: k });
            }
        }
    }
    for (l, k) in scenario.users() {
        if !(scenario.tx_power(l, k) > T::zero()) {
            issues.push(ValidationIssue::NonPositivePower { cell: l, user: k });
        }
        if scenario.pilot_of(l, k) >= config.pilot_len {
            issues.push(ValidationIssue::PilotIndexOutOfRange {
                cell: l,
                user: k,
                index: scenario.pilot_of(l, k),
            });
        }
    }
    for l in 0..config.cells {
        let mut seen = vec![false; config.pilot_len.max(1)];
        for k in 0..config.users_per_cell {
            let idx = scenario.pilot_of(l, k);
            if idx < seen.len() {
                if seen[idx] {
                    issues.push(ValidationIssue::DuplicatePilotInCell { cell: l, index: idx });
                }
                seen[idx] = true;
            }
        }
    }
    issues
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("phase-drift variance must be non-negative")]
    NegativePhaseDrift,
    #[error("distortion level must be non-negative")]
    NegativeDistortion,
    #[error("noise amplification must be at least 1")]
    NoiseAmpBelowOne,
    #[error("scaling exponents must be non-negative")]
    NegativeExponent,
    #[error("unknown oscillator architecture `{0}` (expected `clo` or `slo`)")]
    UnknownOscillator(String),
    #[error("scenario buffer sizes do not match the stated dimensions")]
    DimensionMismatch,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dot_h;

    fn tiny_scenario() -> Scenario<f64> {
        // 2 cells, 2 users; lambda [j][l][k] filled with distinct positives.
        let lambda: Vec<f64> = (0..8).map(|i| 0.1 + i as f64 * 0.05).collect();
        Scenario::from_parts(2, 2, lambda, vec![1.0; 4], vec![0, 1, 0, 1]).unwrap()
    }

    fn tiny_config() -> SystemConfig<f64> {
        SystemConfig {
            cells: 2,
            users_per_cell: 2,
            antennas: 4,
            block_len: 10,
            pilot_len: 2,
            noise_power: 0.1,
        }
    }

    #[test]
    fn dbm_conversion_anchors() {
        assert!((dbm_per_hz_to_linear(-47.0f64) - 1.9952623149688828e-5).abs() < 1e-19);
        assert!((dbm_per_hz_to_linear(-174.0f64) - 10f64.powf(-17.4)).abs() < 1e-30);
        assert_eq!(dbm_per_hz_to_linear(0.0f64), 1.0);
    }

    #[test]
    fn valid_pair_reports_nothing() {
        assert!(validate(&tiny_config(), &tiny_scenario()).is_empty());
    }

    #[test]
    fn block_shorter_than_pilots_is_rejected() {
        let mut cfg = tiny_config();
        cfg.block_len = 4;
        cfg.pilot_len = 8;
        let issues = validate(&cfg, &tiny_scenario());
        assert!(issues
            .iter()
            .any(|i| matches!(i, ValidationIssue::PilotPhaseTooLong { .. })));
    }

    #[test]
    fn more_users_than_pilots_is_rejected() {
        let mut cfg = tiny_config();
        cfg.users_per_cell = 9;
        cfg.pilot_len = 8;
        // Scenario dims no longer match either; both issues surface.
        let issues = validate(&cfg, &tiny_scenario());
        assert!(issues
            .iter()
            .any(|i| matches!(i, ValidationIssue::TooManyUsersPerCell { users: 9, pilot_len: 8 })));
    }

    #[test]
    fn duplicate_pilot_and_bad_values_are_all_reported() {
        let lambda: Vec<f64> = vec![1.0, 1.0, 1.0, -2.0, 1.0, 1.0, 1.0, 1.0];
        let scenario =
            Scenario::from_parts(2, 2, lambda, vec![1.0, 0.0, 1.0, 1.0], vec![0, 0, 0, 1]).unwrap();
        let issues = validate(&tiny_config(), &scenario);
        assert!(issues
            .iter()
            .any(|i| matches!(i, ValidationIssue::DuplicatePilotInCell { cell: 0, index: 0 })));
        assert!(issues
            .iter()
            .any(|i| matches!(i, ValidationIssue::NonPositivePower { cell: 0, user: 1 })));
        assert!(issues
            .iter()
            .any(|i| matches!(i, ValidationIssue::NonPositiveAttenuation { bs: 0, cell: 1, user: 1 })));
    }

    #[test]
    fn hardware_profile_guards() {
        assert!(HardwareProfile::new(0.0, 0.0, 1.0, Oscillator::Common).is_ok());
        assert!(HardwareProfile::new(-0.1, 0.0, 1.0, Oscillator::Common).is_err());
        assert!(HardwareProfile::new(0.0, -0.1, 1.0, Oscillator::Common).is_err());
        assert!(HardwareProfile::new(0.0, 0.0, 0.99, Oscillator::Common).is_err());
        assert!(HardwareProfile::<f64>::ideal(Oscillator::Separate).is_ideal());
    }

    #[test]
    fn dft_book_is_orthogonal_and_unit_modulus() {
        let book = PilotBook::<f64>::dft(8);
        for a in 0..8 {
            for i in 0..8 {
                assert!((book.sequence(a)[i].norm() - 1.0).abs() < 1e-12);
            }
            for b in 0..8 {
                let g = dot_h(book.sequence(a), book.sequence(b));
                if a == b {
                    assert!((g.re - 8.0).abs() < 1e-12 && g.im.abs() < 1e-12);
                } else {
                    assert!(g.norm() < 1e-12, "sequences {a},{b} not orthogonal: {g}");
                }
            }
        }
    }

    #[test]
    fn effective_pilot_carries_data_power() {
        let scenario = tiny_scenario();
        let book = PilotBook::<f64>::dft(2);
        let p = scenario.tx_power(1, 0);
        for x in book.effective(&scenario, 1, 0) {
            assert!((x.norm_sqr() - p).abs() < 1e-12);
        }
    }
}
