//! Linear MMSE channel estimation from the pilot phase.
//!
//! The estimator works entirely in pilot space: for a block of B pilot
//! uses, each channel estimate is a weighted sum of the B received
//! N-vectors, so nothing larger than B×B is ever factorized and the
//! N·B×N·B Kronecker structure of the observation covariance is never
//! materialized.

use crate::linalg::{CMatrix, Cholesky};
use crate::model::{HardwareProfile, PilotBook, Scenario, SystemConfig};
use crate::num::{Real, C};
use thiserror::Error;

/// Phase-drift damping applied to a pilot when estimating at channel use
/// `t`: entry `i` (1-based) is `exp(-delta/2 · (t - i))` for `i = 1..=B`.
pub fn delay_matrix<T: Real>(t: usize, pilot_len: usize, delta: T) -> Result<Vec<T>, EstimatorError> {
    if t < pilot_len {
        return Err(EstimatorError::TimeInsidePilotPhase { t, pilot_len });
    }
    let half = delta * T::lit(-0.5);
    Ok((1..=pilot_len)
        .map(|i| (half * T::from_count(t - i)).exp())
        .collect())
}

/// Pilot Gram matrices of one user.
///
/// Returns `(damped, augmented)`: the outer product of the pilot with its
/// off-diagonal entries damped by the phase-drift correlation
/// `exp(-delta/2·|i1-i2|)`, and the same matrix with the distortion level
/// `kappa²·|x(i)|²` added on the diagonal.
pub fn pilot_grams<T: Real>(
    pilot: &[C<T>],
    delta: T,
    distortion_sq: T,
) -> (CMatrix<T>, CMatrix<T>) {
    let b = pilot.len();
    let mut damped = CMatrix::zeros(b);
    for i1 in 0..b {
        for i2 in 0..b {
            let v = if i1 == i2 {
                C::new(pilot[i1].norm_sqr(), T::zero())
            } else {
                let gap = if i1 > i2 { i1 - i2 } else { i2 - i1 };
                let rho = (delta * T::lit(-0.5) * T::from_count(gap)).exp();
                pilot[i1] * pilot[i2].conj() * rho
            };
            *damped.at_mut(i1, i2) = v;
        }
    }
    let mut augmented = damped.clone();
    for i in 0..b {
        augmented.at_mut(i, i).re += distortion_sq * pilot[i].norm_sqr();
    }
    (damped, augmented)
}

/// Pilot-space covariance of the stacked pilot observation at base station
/// `j`: the gain-weighted sum of every user's augmented Gram plus the
/// amplified noise floor on the diagonal.
pub fn psi_matrix<T: Real>(
    scenario: &Scenario<T>,
    book: &PilotBook<T>,
    profile: &HardwareProfile<T>,
    noise_power: T,
    j: usize,
) -> CMatrix<T> {
    let b = book.len();
    let mut psi = CMatrix::zeros(b);
    for (l, m) in scenario.users() {
        let pilot = book.effective(scenario, l, m);
        let (_, augmented) = pilot_grams(&pilot, profile.phase_drift, profile.distortion_sq);
        psi.scaled_add(&augmented, scenario.attenuation(j, l, m));
    }
    psi.shift_diag(noise_power * profile.noise_amp);
    psi
}

/// Stacked pilot-phase observation at one base station: B blocks of N
/// received samples.
#[derive(Clone, Debug)]
pub struct PilotObservation<T> {
    antennas: usize,
    pilot_len: usize,
    samples: Vec<C<T>>,
}

impl<T: Real> PilotObservation<T> {
    pub fn new(antennas: usize, pilot_len: usize, samples: Vec<C<T>>) -> Result<Self, EstimatorError> {
        if samples.len() != antennas * pilot_len {
            return Err(EstimatorError::DimensionMismatch);
        }
        Ok(PilotObservation { antennas, pilot_len, samples })
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn pilot_len(&self) -> usize {
        self.pilot_len
    }

    /// Received vector of pilot use `i` (0-based block index).
    pub fn block(&self, i: usize) -> &[C<T>] {
        &self.samples[i * self.antennas..(i + 1) * self.antennas]
    }
}

/// Everything that depends only on (scenario, config, profile): effective
/// pilots, per-user Grams, and the factorized per-BS pilot covariance.
#[derive(Clone, Debug)]
pub struct EstimatorCache<T> {
    pilot_len: usize,
    users_per_cell: usize,
    phase_drift: T,
    /// Row-major `[cell·K + user][symbol]`.
    pilots: Vec<C<T>>,
    /// `(damped, augmented)` Grams per user, same ordering.
    grams: Vec<(CMatrix<T>, CMatrix<T>)>,
    psi: Vec<CMatrix<T>>,
    chol: Vec<Cholesky<T>>,
}

impl<T: Real> EstimatorCache<T> {
    pub fn new(
        scenario: &Scenario<T>,
        config: &SystemConfig<T>,
        book: &PilotBook<T>,
        profile: &HardwareProfile<T>,
    ) -> Result<Self, EstimatorError> {
        if book.len() != config.pilot_len
            || scenario.cells() != config.cells
            || scenario.users_per_cell() != config.users_per_cell
        {
            return Err(EstimatorError::DimensionMismatch);
        }
        let mut pilots = Vec::with_capacity(scenario.cells() * scenario.users_per_cell() * book.len());
        let mut grams = Vec::with_capacity(scenario.cells() * scenario.users_per_cell());
        for (l, m) in scenario.users() {
            let pilot = book.effective(scenario, l, m);
            grams.push(pilot_grams(&pilot, profile.phase_drift, profile.distortion_sq));
            pilots.extend_from_slice(&pilot);
        }
        let noise_level = config.noise_power * profile.noise_amp;
        let mut psi = Vec::with_capacity(scenario.cells());
        let mut chol = Vec::with_capacity(scenario.cells());
        for j in 0..scenario.cells() {
            let m = psi_matrix(scenario, book, profile, config.noise_power, j);
            // The covariance is the noise floor plus a positive-semidefinite
            // signal part, so its smallest eigenvalue must stay above
            // (almost all of) the noise level; anything else is a model bug.
            let mut shifted = m.clone();
            shifted.shift_diag(-noise_level * T::lit(0.99));
            if shifted.cholesky().is_err() {
                return Err(EstimatorError::CovarianceNotPd { bs: j });
            }
            chol.push(m.cholesky().map_err(|_| EstimatorError::CovarianceNotPd { bs: j })?);
            psi.push(m);
        }
        Ok(EstimatorCache {
            pilot_len: book.len(),
            users_per_cell: scenario.users_per_cell(),
            phase_drift: profile.phase_drift,
            pilots,
            grams,
            psi,
            chol,
        })
    }

    pub fn pilot_len(&self) -> usize {
        self.pilot_len
    }

    /// Effective pilot of user (l, k).
    pub fn pilot(&self, l: usize, k: usize) -> &[C<T>] {
        let i = l * self.users_per_cell + k;
        &self.pilots[i * self.pilot_len..(i + 1) * self.pilot_len]
    }

    /// Phase-damped pilot Gram of user (l, k).
    pub fn gram_damped(&self, l: usize, k: usize) -> &CMatrix<T> {
        &self.grams[l * self.users_per_cell + k].0
    }

    /// Distortion-augmented pilot Gram of user (l, k).
    pub fn gram_augmented(&self, l: usize, k: usize) -> &CMatrix<T> {
        &self.grams[l * self.users_per_cell + k].1
    }

    /// Pilot-space covariance at base station `j`.
    pub fn psi(&self, j: usize) -> &CMatrix<T> {
        &self.psi[j]
    }

    /// Solve `psi_j · x = rhs`.
    pub fn solve_psi(&self, j: usize, rhs: &[C<T>]) -> Vec<C<T>> {
        self.chol[j].solve(rhs)
    }

    /// Pilot of user (l, k) damped for estimation at channel use `t`.
    pub fn damped_pilot(&self, l: usize, k: usize, t: usize) -> Result<Vec<C<T>>, EstimatorError> {
        let d = delay_matrix(t, self.pilot_len, self.phase_drift)?;
        Ok(self
            .pilot(l, k)
            .iter()
            .zip(d)
            .map(|(x, w)| x * w)
            .collect())
    }

    /// LMMSE combining weights: the estimate of channel (l, k) at base
    /// station `j` and use `t` is `sum_i weights[i] · y_j(i)` over the B
    /// pilot blocks.
    pub fn weights(
        &self,
        scenario: &Scenario<T>,
        j: usize,
        l: usize,
        k: usize,
        t: usize,
    ) -> Result<Vec<C<T>>, EstimatorError> {
        let u = self.damped_pilot(l, k, t)?;
        let z = self.solve_psi(j, &u);
        let lam = scenario.attenuation(j, l, k);
        Ok(z.iter().map(|zi| zi.conj() * lam).collect())
    }
}

/// LMMSE estimate of the channel from user (l, k) to base station `j` at
/// channel use `t`, given that station's stacked pilot observation.
pub fn lmmse_estimate<T: Real>(
    obs: &PilotObservation<T>,
    cache: &EstimatorCache<T>,
    scenario: &Scenario<T>,
    j: usize,
    l: usize,
    k: usize,
    t: usize,
) -> Result<Vec<C<T>>, EstimatorError> {
    if obs.pilot_len() != cache.pilot_len() {
        return Err(EstimatorError::DimensionMismatch);
    }
    let w = cache.weights(scenario, j, l, k, t)?;
    let n = obs.antennas();
    let mut est = vec![C::new(T::zero(), T::zero()); n];
    for (i, wi) in w.iter().enumerate() {
        for (e, y) in est.iter_mut().zip(obs.block(i)) {
            *e += *y * *wi;
        }
    }
    Ok(est)
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum EstimatorError {
    #[error("channel use {t} precedes the end of the pilot phase ({pilot_len})")]
    TimeInsidePilotPhase { t: usize, pilot_len: usize },
    #[error("pilot covariance at base station {bs} is not positive definite")]
    CovarianceNotPd { bs: usize },
    #[error("estimator input dimensions are inconsistent")]
    DimensionMismatch,
}
