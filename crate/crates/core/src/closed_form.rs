//! Closed-form achievable rates under maximum-ratio combining.
//!
//! For each user and channel use, the four moments of the combined signal
//! (filter norm, desired-signal correlation, per-link interference power,
//! distortion power) have closed forms in pilot space; assembling them
//! yields an effective SINR and an achievable rate without simulating a
//! single channel realization. The same module hosts the antenna-scaling
//! substitutions for the imperfection levels and the feasibility test for
//! a non-vanishing asymptotic SINR.

use crate::estimator::{EstimatorCache, EstimatorError};
use crate::linalg::dot_h;
use crate::model::{
    HardwareProfile, Oscillator, PilotBook, ScalingExponents, Scenario, SystemConfig,
};
use crate::num::{CompensatedSum, Real};
use rayon::prelude::*;
use thiserror::Error;

/// Moments of the combined receive signal for one (base station, user,
/// channel use) triple, taken over channels, phase drifts, distortion and
/// noise.
#[derive(Clone, Debug)]
pub struct MomentSet<T> {
    /// E{ ||v||² } of the combining vector v (the user's channel estimate).
    pub filter_norm: T,
    /// E{ v^H h } against the user's own channel; real by construction.
    pub signal: T,
    /// E{ |v^H h_lm|² } for every interfering link, row-major `[cell][user]`.
    pub interference: Vec<T>,
    /// E{ |v^H d|² } against the additive distortion.
    pub distortion: T,
    users_per_cell: usize,
}

impl<T: Real> MomentSet<T> {
    /// Assemble a moment set from externally computed values (for example,
    /// empirical means), with `interference` row-major over `[cell][user]`.
    pub fn from_parts(
        filter_norm: T,
        signal: T,
        interference: Vec<T>,
        distortion: T,
        users_per_cell: usize,
    ) -> Self {
        assert!(
            users_per_cell > 0 && interference.len() % users_per_cell == 0,
            "interference table must cover whole cells"
        );
        MomentSet { filter_norm, signal, interference, distortion, users_per_cell }
    }

    pub fn interference_from(&self, l: usize, m: usize) -> T {
        self.interference[l * self.users_per_cell + m]
    }
}

/// Closed-form moments for user `k` of cell `j` at channel use `t`.
pub fn mrc_moments<T: Real>(
    scenario: &Scenario<T>,
    config: &SystemConfig<T>,
    profile: &HardwareProfile<T>,
    cache: &EstimatorCache<T>,
    j: usize,
    k: usize,
    t: usize,
) -> Result<MomentSet<T>, ClosedFormError> {
    let u_own = cache.damped_pilot(j, k, t)?;
    let w = cache.solve_psi(j, &u_own);
    let quality = dot_h(&u_own, &w).re; // pilot-space estimation quality
    let n = T::from_count(config.antennas);
    let lam_own = scenario.attenuation(j, j, k);
    let own_sq = lam_own * lam_own;
    let filter_norm = n * own_sq * quality;

    let users = scenario.users_per_cell();
    let mut interference = Vec::with_capacity(scenario.cells() * users);
    let mut dist_gain = CompensatedSum::new(); // sum p·lambda
    let mut dist_beam = CompensatedSum::new(); // sum p·lambda²·q
    for (l, m) in scenario.users() {
        let lam = scenario.attenuation(j, l, m);
        let p = scenario.tx_power(l, m);
        let q_aug = cache.gram_augmented(l, m).quad_form(&w).re;
        let cross = match profile.oscillator {
            // A common oscillator keeps the array phase-coherent, so the
            // full damped Gram survives in the rank-one (beamformed) term.
            Oscillator::Common => cache.gram_damped(l, m).quad_form(&w).re,
            // Independent oscillators average the off-diagonal phases away,
            // leaving only the damped-pilot alignment.
            Oscillator::Separate => {
                let u_lm = cache.damped_pilot(l, m, t)?;
                dot_h(&w, &u_lm).norm_sqr()
            }
        };
        interference.push(lam * filter_norm + n * own_sq * lam * lam * (q_aug + (n - T::one()) * cross));
        dist_gain.add(p * lam);
        dist_beam.add(p * lam * lam * q_aug);
    }
    let kappa_sq = profile.distortion_sq;
    let distortion = kappa_sq * (filter_norm * dist_gain.value() + n * own_sq * dist_beam.value());

    Ok(MomentSet {
        filter_norm,
        signal: filter_norm,
        interference,
        distortion,
        users_per_cell: users,
    })
}

/// Effective SINR of user `k` in cell `j` assembled from its moments.
pub fn sinr<T: Real>(
    moments: &MomentSet<T>,
    scenario: &Scenario<T>,
    config: &SystemConfig<T>,
    profile: &HardwareProfile<T>,
    j: usize,
    k: usize,
) -> Result<T, ClosedFormError> {
    let p_own = scenario.tx_power(j, k);
    let numerator = p_own * moments.signal * moments.signal;
    let mut acc = CompensatedSum::new();
    for (l, m) in scenario.users() {
        acc.add(scenario.tx_power(l, m) * moments.interference_from(l, m));
    }
    let denominator = acc.value() - numerator
        + moments.distortion
        + config.noise_power * profile.noise_amp * moments.filter_norm;
    if !(denominator > T::zero()) || !denominator.is_finite() {
        return Err(ClosedFormError::DegenerateSinr { cell: j, user: k });
    }
    Ok(numerator / denominator)
}

/// Achievable rate in bit per channel use: the data-phase SINRs averaged
/// over the whole block, pilot overhead included.
pub fn rate<T: Real>(sinrs: &[T], block_len: usize) -> T {
    let mut acc = CompensatedSum::new();
    for s in sinrs {
        acc.add((T::one() + *s).log2());
    }
    acc.value() / T::from_count(block_len)
}

/// Rate of one user, with its SINR trajectory over the data phase.
#[derive(Clone, Debug)]
pub struct UserRate<T> {
    pub cell: usize,
    pub user: usize,
    pub rate: T,
    /// SINR at channel uses `pilot_len+1..=block_len`.
    pub sinr: Vec<T>,
}

/// Closed-form rates for every user in the network.
#[derive(Clone, Debug)]
pub struct RateReport<T> {
    pub per_user: Vec<UserRate<T>>,
    pub cell_sums: Vec<T>,
    pub network_sum: T,
}

/// Fold per-user results into cell and network sums.
pub(crate) fn assemble_report<T: Real>(per_user: Vec<UserRate<T>>, cells: usize) -> RateReport<T> {
    let mut cell_sums = vec![T::zero(); cells];
    for u in &per_user {
        cell_sums[u.cell] += u.rate;
    }
    let mut acc = CompensatedSum::new();
    for c in &cell_sums {
        acc.add(*c);
    }
    RateReport { per_user, cell_sums, network_sum: acc.value() }
}

/// Evaluate the whole network: moments, SINR trajectory and rate for every
/// user, plus per-cell and network sum rates.
pub fn rate_report<T: Real>(
    scenario: &Scenario<T>,
    config: &SystemConfig<T>,
    profile: &HardwareProfile<T>,
) -> Result<RateReport<T>, ClosedFormError> {
    let book = PilotBook::dft(config.pilot_len);
    let cache = EstimatorCache::new(scenario, config, &book, profile)?;
    let users: Vec<(usize, usize)> = scenario.users().collect();
    let per_user: Vec<UserRate<T>> = users
        .par_iter()
        .map(|&(j, k)| {
            let count = config.block_len - config.pilot_len;
            let traj = if profile.phase_drift == T::zero() {
                // Without drift the damped pilot, and hence every moment, is
                // identical at every data use: evaluate once and replicate.
                let t = config.pilot_len + 1;
                let m = mrc_moments(scenario, config, profile, &cache, j, k, t)?;
                vec![sinr(&m, scenario, config, profile, j, k)?; count]
            } else {
                let mut traj = Vec::with_capacity(count);
                for t in config.data_times() {
                    let m = mrc_moments(scenario, config, profile, &cache, j, k, t)?;
                    traj.push(sinr(&m, scenario, config, profile, j, k)?);
                }
                traj
            };
            Ok(UserRate {
                cell: j,
                user: k,
                rate: rate(&traj, config.block_len),
                sinr: traj,
            })
        })
        .collect::<Result<_, ClosedFormError>>()?;
    Ok(assemble_report(per_user, scenario.cells()))
}

/// Imperfection levels when the hardware is allowed to degrade with the
/// array size: `kappa² = kappa0²·N^t1`, `xi = xi0·N^t2`,
/// `delta = delta0·(1 + ln N^t3)`.
pub fn apply_scaling<T: Real>(
    exponents: &ScalingExponents<T>,
    antennas: usize,
    oscillator: Oscillator,
) -> HardwareProfile<T> {
    let n = T::from_count(antennas);
    HardwareProfile {
        phase_drift: exponents.base_phase_drift
            * (T::one() + exponents.phase_drift_exp * n.ln()),
        distortion_sq: exponents.base_distortion_sq * n.powf(exponents.distortion_exp),
        noise_amp: exponents.base_noise_amp * n.powf(exponents.noise_amp_exp),
        oscillator,
    }
}

/// Whether the exponent triple keeps the SINR at channel use `t` bounded
/// away from zero as the antenna count grows.
pub fn scaling_law_satisfied<T: Real>(
    exponents: &ScalingExponents<T>,
    t: usize,
    pilot_len: usize,
    oscillator: Oscillator,
) -> bool {
    let half = T::lit(0.5);
    let worst = exponents.distortion_exp.max(exponents.noise_amp_exp);
    match oscillator {
        Oscillator::Common => worst <= half && exponents.phase_drift_exp == T::zero(),
        Oscillator::Separate => {
            let elapsed = T::from_count(t.saturating_sub(pilot_len));
            worst + exponents.base_phase_drift * elapsed * half * exponents.phase_drift_exp
                <= half
        }
    }
}

/// Block-level verdict: the law evaluated at the last (worst) channel use.
pub fn scaling_law_satisfied_block<T: Real>(
    exponents: &ScalingExponents<T>,
    config: &SystemConfig<T>,
    oscillator: Oscillator,
) -> bool {
    scaling_law_satisfied(exponents, config.block_len, config.pilot_len, oscillator)
}

/// Closed-form SINR of one user evaluated at the end of the block for a
/// growing sequence of antenna counts, with the imperfections scaled along.
#[derive(Clone, Debug)]
pub struct AsymptoticProbe<T> {
    pub antennas: Vec<usize>,
    pub sinr: Vec<T>,
}

impl<T: Real> AsymptoticProbe<T> {
    /// Ratio of the last two probe points; near 1 indicates saturation.
    pub fn tail_ratio(&self) -> T {
        let n = self.sinr.len();
        assert!(n >= 2, "tail ratio needs at least two probe points");
        self.sinr[n - 1] / self.sinr[n - 2]
    }
}

pub fn asymptotic_probe<T: Real>(
    scenario: &Scenario<T>,
    config: &SystemConfig<T>,
    exponents: &ScalingExponents<T>,
    oscillator: Oscillator,
    antenna_counts: &[usize],
    j: usize,
    k: usize,
) -> Result<AsymptoticProbe<T>, ClosedFormError> {
    if antenna_counts.is_empty() {
        return Err(ClosedFormError::EmptyProbe);
    }
    let book = PilotBook::dft(config.pilot_len);
    let t = config.block_len;
    let mut sinrs = Vec::with_capacity(antenna_counts.len());
    for &n in antenna_counts {
        let profile = apply_scaling(exponents, n, oscillator);
        let cfg = SystemConfig { antennas: n, ..*config };
        let cache = EstimatorCache::new(scenario, &cfg, &book, &profile)?;
        let m = mrc_moments(scenario, &cfg, &profile, &cache, j, k, t)?;
        sinrs.push(sinr(&m, scenario, &cfg, &profile, j, k)?);
    }
    Ok(AsymptoticProbe {
        antennas: antenna_counts.to_vec(),
        sinr: sinrs,
    })
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum ClosedFormError {
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error("SINR denominator for user ({cell},{user}) is not positive; model inputs are inconsistent")]
    DegenerateSinr { cell: usize, user: usize },
    #[error("asymptotic probe needs at least one antenna count")]
    EmptyProbe,
}
