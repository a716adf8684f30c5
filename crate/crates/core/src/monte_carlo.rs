//! Monte Carlo oracle for the closed-form moments and rates.
//!
//! Instead of trusting the analytic expressions, this module simulates the
//! uplink directly: it draws channels, Wiener phase trajectories, additive
//! distortion and receiver noise for whole coherence blocks, runs the
//! linear channel estimator on the simulated pilot observations, applies
//! maximum-ratio combining, and averages the resulting moments with
//! standard errors. Agreement with the closed forms is the strongest
//! correctness check the crate has.
//!
//! Reproducibility contract: one master seed spawns an independent
//! pseudo-random substream per block (indexed by block number), and all
//! accumulation is fixed-shape pairwise summation, so results are
//! bit-identical for a given `(inputs, seed)` regardless of how many
//! worker threads participate.

use crate::closed_form::{assemble_report, rate, sinr, ClosedFormError, MomentSet, RateReport, UserRate};
use crate::estimator::{EstimatorCache, EstimatorError, PilotObservation};
use crate::model::{HardwareProfile, Oscillator, PilotBook, Scenario, SystemConfig};
use crate::num::{complex_normal, pairwise_sum, CompensatedSum, Real, C};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use std::io::Write;
use thiserror::Error;

/// Blocks per work chunk. Fixing the chunk shape (rather than letting the
/// scheduler choose) is what makes parallel reduction bit-deterministic.
const CHUNK_BLOCKS: usize = 1024;

/// Scalar sample fields per target before the per-link interference block:
/// filter norm, signal correlation, distortion power.
const SAMPLE_FIELDS: usize = 3;

/// One simulated coherence block: everything random that the uplink model
/// contains, drawn once and queried from the outside.
///
/// Channel-use indices `t` are 1-based and run over `1..=block_len`; the
/// pilot phase occupies `1..=pilot_len`.
#[derive(Clone, Debug)]
pub struct BlockRealization<T> {
    cells: usize,
    users: usize,
    antennas: usize,
    block_len: usize,
    /// `[bs][cell][user][antenna]` channel coefficients.
    channels: Vec<C<T>>,
    /// `[bs][antenna][t-1]` accumulated oscillator phases.
    phases: Vec<T>,
    /// `[bs][t-1][antenna]` additive distortion draws.
    distortion: Vec<C<T>>,
    /// `[bs][t-1][antenna]` receiver noise draws.
    noise: Vec<C<T>>,
    /// `[cell][user][t-1]` transmitted symbols (pilots then payload).
    symbols: Vec<C<T>>,
}

impl<T: Real> BlockRealization<T> {
    /// Channel from user `(l, m)` to base station `j`, one entry per antenna.
    pub fn channel(&self, j: usize, l: usize, m: usize) -> &[C<T>] {
        let base = ((j * self.cells + l) * self.users + m) * self.antennas;
        &self.channels[base..base + self.antennas]
    }

    /// Accumulated phase of antenna `n` at base station `j`, channel use `t`.
    pub fn phase(&self, j: usize, n: usize, t: usize) -> T {
        debug_assert!((1..=self.block_len).contains(&t));
        self.phases[(j * self.antennas + n) * self.block_len + (t - 1)]
    }

    /// Transmitted symbol of user `(l, m)` at channel use `t`.
    pub fn symbol(&self, l: usize, m: usize, t: usize) -> C<T> {
        debug_assert!((1..=self.block_len).contains(&t));
        self.symbols[(l * self.users + m) * self.block_len + (t - 1)]
    }

    /// Distortion vector at base station `j`, channel use `t`.
    pub fn distortion_at(&self, j: usize, t: usize) -> &[C<T>] {
        let base = (j * self.block_len + (t - 1)) * self.antennas;
        &self.distortion[base..base + self.antennas]
    }

    /// Receiver-noise vector at base station `j`, channel use `t`.
    pub fn noise_at(&self, j: usize, t: usize) -> &[C<T>] {
        let base = (j * self.block_len + (t - 1)) * self.antennas;
        &self.noise[base..base + self.antennas]
    }

    /// Received vector at base station `j`, channel use `t`: the phase
    /// rotation applies to the aggregate user signal only, never to the
    /// distortion or noise.
    pub fn received(&self, j: usize, t: usize) -> Vec<C<T>> {
        assert!((1..=self.block_len).contains(&t), "channel use is 1-based");
        let n = self.antennas;
        let mut acc = vec![C::new(T::zero(), T::zero()); n];
        for l in 0..self.cells {
            for m in 0..self.users {
                let x = self.symbol(l, m, t);
                let h = self.channel(j, l, m);
                for a in 0..n {
                    acc[a] += h[a] * x;
                }
            }
        }
        let d = self.distortion_at(j, t);
        let w = self.noise_at(j, t);
        for a in 0..n {
            let rot = C::from_polar(T::one(), self.phase(j, a, t));
            acc[a] = acc[a] * rot + d[a] + w[a];
        }
        acc
    }

    /// Stacked pilot-phase observation at base station `j`, ready for the
    /// channel estimator.
    pub fn pilot_observation(&self, j: usize, pilot_len: usize) -> PilotObservation<T> {
        let mut samples = Vec::with_capacity(pilot_len * self.antennas);
        for i in 1..=pilot_len {
            samples.extend_from_slice(&self.received(j, i));
        }
        PilotObservation::new(self.antennas, pilot_len, samples)
            .expect("block dimensions are consistent by construction")
    }
}

/// Simulate one coherence block. `block` selects an independent random
/// substream of `master_seed`, so blocks can be generated in any order (or
/// in parallel) without changing their content.
pub fn simulate_block<T: Real>(
    scenario: &Scenario<T>,
    config: &SystemConfig<T>,
    profile: &HardwareProfile<T>,
    book: &PilotBook<T>,
    master_seed: u64,
    block: u64,
) -> BlockRealization<T> {
    simulate_block_rotated(scenario, config, profile, book, master_seed, block, T::zero())
}

/// [`simulate_block`] with a constant offset added to every initial phase
/// φ(0). The received-signal distribution is invariant to this offset; the
/// parameter exists so tests can verify that claim.
pub fn simulate_block_rotated<T: Real>(
    scenario: &Scenario<T>,
    config: &SystemConfig<T>,
    profile: &HardwareProfile<T>,
    book: &PilotBook<T>,
    master_seed: u64,
    block: u64,
    phase_offset: T,
) -> BlockRealization<T> {
    let cells = scenario.cells();
    let users = scenario.users_per_cell();
    let n = config.antennas;
    let t_len = config.block_len;
    let b_len = config.pilot_len;
    let mut rng = ChaCha12Rng::seed_from_u64(master_seed);
    rng.set_stream(block);

    // Transmitted symbols: deterministic pilots, then Gaussian payload.
    let zero = C::new(T::zero(), T::zero());
    let mut symbols = vec![zero; cells * users * t_len];
    for (l, m) in scenario.users() {
        let base = (l * users + m) * t_len;
        symbols[base..base + b_len].copy_from_slice(&book.effective(scenario, l, m));
        let p = scenario.tx_power(l, m);
        for slot in symbols[base + b_len..base + t_len].iter_mut() {
            *slot = complex_normal(&mut rng, p);
        }
    }

    let mut channels = vec![zero; cells * cells * users * n];
    let mut phases = vec![T::zero(); cells * n * t_len];
    let mut distortion = vec![zero; cells * t_len * n];
    let mut noise = vec![zero; cells * t_len * n];
    let drift_sd = profile.phase_drift.sqrt();
    let noise_var = config.noise_power * profile.noise_amp;
    for j in 0..cells {
        for (l, m) in scenario.users() {
            let lam = scenario.attenuation(j, l, m);
            let base = ((j * cells + l) * users + m) * n;
            for slot in channels[base..base + n].iter_mut() {
                *slot = complex_normal(&mut rng, lam);
            }
        }

        let row0 = j * n * t_len;
        match profile.oscillator {
            Oscillator::Common => {
                let mut phi = phase_offset;
                for t in 0..t_len {
                    phi += drift_sd * T::standard_normal(&mut rng);
                    phases[row0 + t] = phi;
                }
                for a in 1..n {
                    phases.copy_within(row0..row0 + t_len, (j * n + a) * t_len);
                }
            }
            Oscillator::Separate => {
                for a in 0..n {
                    let mut phi = phase_offset;
                    let base = (j * n + a) * t_len;
                    for t in 0..t_len {
                        phi += drift_sd * T::standard_normal(&mut rng);
                        phases[base + t] = phi;
                    }
                }
            }
        }

        // Distortion covariance is diagonal, fixed by this block's channel
        // realization, and shared by every channel use; the draws themselves
        // are independent across time and antennas.
        let mut dist_var = vec![T::zero(); n];
        for (l, m) in scenario.users() {
            let p = scenario.tx_power(l, m);
            let base = ((j * cells + l) * users + m) * n;
            for (dv, h) in dist_var.iter_mut().zip(&channels[base..base + n]) {
                *dv += p * h.norm_sqr();
            }
        }
        for t in 0..t_len {
            let base = (j * t_len + t) * n;
            for a in 0..n {
                distortion[base + a] =
                    complex_normal(&mut rng, profile.distortion_sq * dist_var[a]);
            }
        }
        for t in 0..t_len {
            let base = (j * t_len + t) * n;
            for slot in noise[base..base + n].iter_mut() {
                *slot = complex_normal(&mut rng, noise_var);
            }
        }
    }

    BlockRealization {
        cells,
        users,
        antennas: n,
        block_len: t_len,
        channels,
        phases,
        distortion,
        noise,
        symbols,
    }
}

/// A sample mean together with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stat<T> {
    pub mean: T,
    pub std_err: T,
}

/// Empirical estimates of the four combining moments for one
/// (base station, user, channel use) triple.
#[derive(Clone, Debug)]
pub struct EmpiricalMoments<T> {
    pub filter_norm: Stat<T>,
    pub signal: Stat<T>,
    /// Row-major `[cell][user]`, matching [`MomentSet::interference`].
    pub interference: Vec<Stat<T>>,
    pub distortion: Stat<T>,
    pub realizations: usize,
    users_per_cell: usize,
}

impl<T: Real> EmpiricalMoments<T> {
    pub fn interference_from(&self, l: usize, m: usize) -> &Stat<T> {
        &self.interference[l * self.users_per_cell + m]
    }
}

/// One Monte Carlo measurement point: which user's combiner, at which use.
struct Target<T> {
    cell: usize,
    user: usize,
    t: usize,
    weights: Vec<C<T>>,
}

fn sample_width(scenario: &Scenario<impl Real>) -> usize {
    SAMPLE_FIELDS + scenario.cells() * scenario.users_per_cell()
}

/// Per-block samples for every target, laid out target-major as
/// `[filter_norm, signal, distortion, interference...]`.
fn block_samples<T: Real>(
    scenario: &Scenario<T>,
    config: &SystemConfig<T>,
    profile: &HardwareProfile<T>,
    book: &PilotBook<T>,
    targets: &[Target<T>],
    master_seed: u64,
    block: u64,
    phase_offset: T,
) -> Vec<T> {
    let real =
        simulate_block_rotated(scenario, config, profile, book, master_seed, block, phase_offset);
    let cells = scenario.cells();
    let users = scenario.users_per_cell();
    let n = config.antennas;
    let zero = C::new(T::zero(), T::zero());
    let mut obs: Vec<Option<PilotObservation<T>>> = (0..cells).map(|_| None).collect();
    let mut rotations: Vec<Option<Vec<C<T>>>> =
        (0..cells * config.block_len).map(|_| None).collect();
    let mut out = Vec::with_capacity(targets.len() * sample_width(scenario));
    let mut links = Vec::with_capacity(cells * users);
    for target in targets {
        let (j, t) = (target.cell, target.t);
        let o = obs[j].get_or_insert_with(|| real.pilot_observation(j, config.pilot_len));
        let mut v = vec![zero; n];
        for (i, wi) in target.weights.iter().enumerate() {
            for (va, ya) in v.iter_mut().zip(o.block(i)) {
                *va += *ya * *wi;
            }
        }
        let rot = rotations[j * config.block_len + (t - 1)].get_or_insert_with(|| {
            (0..n).map(|a| C::from_polar(T::one(), real.phase(j, a, t))).collect()
        });

        let mut filter_norm = T::zero();
        for va in &v {
            filter_norm += va.norm_sqr();
        }
        let mut signal = T::zero();
        links.clear();
        for l in 0..cells {
            for m in 0..users {
                let h = real.channel(j, l, m);
                let mut acc = zero;
                for a in 0..n {
                    acc += v[a].conj() * rot[a] * h[a];
                }
                if l == j && m == target.user {
                    signal = acc.re;
                }
                links.push(acc.norm_sqr());
            }
        }
        let mut dist = zero;
        for (va, da) in v.iter().zip(real.distortion_at(j, t)) {
            dist += va.conj() * *da;
        }

        out.push(filter_norm);
        out.push(signal);
        out.push(dist.norm_sqr());
        out.extend_from_slice(&links);
    }
    out
}

/// Sums and sums-of-squares of every sample component over `blocks`
/// realizations, reduced pairwise in fixed-size chunks so the result does
/// not depend on thread count.
fn collect_samples<T: Real>(
    scenario: &Scenario<T>,
    config: &SystemConfig<T>,
    profile: &HardwareProfile<T>,
    book: &PilotBook<T>,
    targets: &[Target<T>],
    blocks: usize,
    master_seed: u64,
    phase_offset: T,
) -> (Vec<T>, Vec<T>) {
    let width = targets.len() * sample_width(scenario);
    let chunk_count = blocks.div_ceil(CHUNK_BLOCKS);
    let partials: Vec<(Vec<T>, Vec<T>)> = (0..chunk_count)
        .into_par_iter()
        .map(|chunk| {
            let lo = chunk * CHUNK_BLOCKS;
            let hi = blocks.min(lo + CHUNK_BLOCKS);
            let len = hi - lo;
            // Component-major scratch so each component is summed pairwise
            // over a contiguous run of samples.
            let mut scratch = vec![T::zero(); width * len];
            for (s, b) in (lo..hi).enumerate() {
                let vals = block_samples(
                    scenario,
                    config,
                    profile,
                    book,
                    targets,
                    master_seed,
                    b as u64,
                    phase_offset,
                );
                for (ci, val) in vals.iter().enumerate() {
                    scratch[ci * len + s] = *val;
                }
            }
            let mut sums = Vec::with_capacity(width);
            let mut squares = Vec::with_capacity(width);
            let mut sq = vec![T::zero(); len];
            for ci in 0..width {
                let col = &scratch[ci * len..(ci + 1) * len];
                sums.push(pairwise_sum(col));
                for (dst, x) in sq.iter_mut().zip(col) {
                    *dst = *x * *x;
                }
                squares.push(pairwise_sum(&sq));
            }
            (sums, squares)
        })
        .collect();

    let mut sums = vec![T::zero(); width];
    let mut squares = vec![T::zero(); width];
    let mut col = vec![T::zero(); chunk_count];
    for ci in 0..width {
        for (dst, p) in col.iter_mut().zip(&partials) {
            *dst = p.0[ci];
        }
        sums[ci] = pairwise_sum(&col);
        for (dst, p) in col.iter_mut().zip(&partials) {
            *dst = p.1[ci];
        }
        squares[ci] = pairwise_sum(&col);
    }
    (sums, squares)
}

fn stat_from<T: Real>(sum: T, square: T, blocks: usize) -> Stat<T> {
    let r = T::from_count(blocks);
    let mean = sum / r;
    let excess = (square - sum * sum / r).max(T::zero());
    Stat { mean, std_err: (excess / (r - T::one()) / r).sqrt() }
}

fn moments_engine<T: Real>(
    scenario: &Scenario<T>,
    config: &SystemConfig<T>,
    profile: &HardwareProfile<T>,
    j: usize,
    k: usize,
    times: &[usize],
    blocks: usize,
    seed: u64,
    phase_offset: T,
) -> Result<Vec<EmpiricalMoments<T>>, MonteCarloError> {
    if blocks < 2 {
        return Err(MonteCarloError::TooFewBlocks { got: blocks });
    }
    for &t in times {
        if t < 1 || t > config.block_len {
            return Err(MonteCarloError::TimeOutsideBlock { t, block_len: config.block_len });
        }
    }
    let book = PilotBook::dft(config.pilot_len);
    let cache = EstimatorCache::new(scenario, config, &book, profile)?;
    let targets = times
        .iter()
        .map(|&t| {
            Ok(Target { cell: j, user: k, t, weights: cache.weights(scenario, j, j, k, t)? })
        })
        .collect::<Result<Vec<_>, EstimatorError>>()?;
    let (sums, squares) =
        collect_samples(scenario, config, profile, &book, &targets, blocks, seed, phase_offset);
    let width = sample_width(scenario);
    let links = scenario.cells() * scenario.users_per_cell();
    Ok((0..times.len())
        .map(|ti| {
            let off = ti * width;
            EmpiricalMoments {
                filter_norm: stat_from(sums[off], squares[off], blocks),
                signal: stat_from(sums[off + 1], squares[off + 1], blocks),
                distortion: stat_from(sums[off + 2], squares[off + 2], blocks),
                interference: (0..links)
                    .map(|i| stat_from(sums[off + SAMPLE_FIELDS + i], squares[off + SAMPLE_FIELDS + i], blocks))
                    .collect(),
                realizations: blocks,
                users_per_cell: scenario.users_per_cell(),
            }
        })
        .collect())
}

/// Empirical combining moments for user `k` of cell `j` at channel use `t`,
/// averaged over `blocks` independent coherence blocks.
pub fn estimate_moments<T: Real>(
    scenario: &Scenario<T>,
    config: &SystemConfig<T>,
    profile: &HardwareProfile<T>,
    j: usize,
    k: usize,
    t: usize,
    blocks: usize,
    seed: u64,
) -> Result<EmpiricalMoments<T>, MonteCarloError> {
    let mut v = moments_engine(scenario, config, profile, j, k, &[t], blocks, seed, T::zero())?;
    Ok(v.pop().expect("one target requested"))
}

/// Batch variant of [`estimate_moments`]: several channel uses measured on
/// the same simulated blocks, one simulation pass in total.
pub fn estimate_moments_at<T: Real>(
    scenario: &Scenario<T>,
    config: &SystemConfig<T>,
    profile: &HardwareProfile<T>,
    j: usize,
    k: usize,
    times: &[usize],
    blocks: usize,
    seed: u64,
) -> Result<Vec<EmpiricalMoments<T>>, MonteCarloError> {
    moments_engine(scenario, config, profile, j, k, times, blocks, seed, T::zero())
}

/// [`estimate_moments`] with a constant initial-phase offset, for checking
/// that the moment distribution is rotation-invariant.
pub fn estimate_moments_rotated<T: Real>(
    scenario: &Scenario<T>,
    config: &SystemConfig<T>,
    profile: &HardwareProfile<T>,
    j: usize,
    k: usize,
    t: usize,
    blocks: usize,
    seed: u64,
    phase_offset: T,
) -> Result<EmpiricalMoments<T>, MonteCarloError> {
    let mut v =
        moments_engine(scenario, config, profile, j, k, &[t], blocks, seed, phase_offset)?;
    Ok(v.pop().expect("one target requested"))
}

/// Effective SINR assembled from empirical moment means, mirroring the
/// closed-form assembly.
pub fn empirical_sinr<T: Real>(
    moments: &EmpiricalMoments<T>,
    scenario: &Scenario<T>,
    config: &SystemConfig<T>,
    profile: &HardwareProfile<T>,
    j: usize,
    k: usize,
) -> Result<T, MonteCarloError> {
    let set = MomentSet::from_parts(
        moments.filter_norm.mean,
        moments.signal.mean,
        moments.interference.iter().map(|s| s.mean).collect(),
        moments.distortion.mean,
        moments.users_per_cell,
    );
    Ok(sinr(&set, scenario, config, profile, j, k)?)
}

/// Simulation-based rate report for every user: the same shape the closed
/// form produces, for direct cross-validation.
pub fn empirical_rate<T: Real>(
    scenario: &Scenario<T>,
    config: &SystemConfig<T>,
    profile: &HardwareProfile<T>,
    blocks: usize,
    seed: u64,
) -> Result<RateReport<T>, MonteCarloError> {
    if blocks < 2 {
        return Err(MonteCarloError::TooFewBlocks { got: blocks });
    }
    let book = PilotBook::dft(config.pilot_len);
    let cache = EstimatorCache::new(scenario, config, &book, profile)?;
    let times: Vec<usize> = config.data_times().collect();
    let user_list: Vec<(usize, usize)> = scenario.users().collect();
    let mut targets = Vec::with_capacity(user_list.len() * times.len());
    for &(j, k) in &user_list {
        for &t in &times {
            targets.push(Target { cell: j, user: k, t, weights: cache.weights(scenario, j, j, k, t)? });
        }
    }
    let (sums, _) =
        collect_samples(scenario, config, profile, &book, &targets, blocks, seed, T::zero());
    let width = sample_width(scenario);
    let links = scenario.cells() * scenario.users_per_cell();
    let r = T::from_count(blocks);
    let mut per_user = Vec::with_capacity(user_list.len());
    for (ui, &(j, k)) in user_list.iter().enumerate() {
        let mut traj = Vec::with_capacity(times.len());
        for ti in 0..times.len() {
            let off = (ui * times.len() + ti) * width;
            let set = MomentSet::from_parts(
                sums[off] / r,
                sums[off + 1] / r,
                (0..links).map(|i| sums[off + SAMPLE_FIELDS + i] / r).collect(),
                sums[off + 2] / r,
                scenario.users_per_cell(),
            );
            traj.push(sinr(&set, scenario, config, profile, j, k)?);
        }
        per_user.push(UserRate { cell: j, user: k, rate: rate(&traj, config.block_len), sinr: traj });
    }
    Ok(assemble_report(per_user, scenario.cells()))
}

/// Write raw per-block moment samples for user `k` of cell `j` at channel
/// use `t` as CSV, for offline statistical analysis. `interference_sum` is
/// the transmit-power-weighted sum over all links, i.e. the quantity that
/// enters the SINR denominator.
pub fn dump_block_moments<T: Real>(
    out: &mut dyn Write,
    scenario: &Scenario<T>,
    config: &SystemConfig<T>,
    profile: &HardwareProfile<T>,
    j: usize,
    k: usize,
    t: usize,
    blocks: usize,
    seed: u64,
) -> Result<(), MonteCarloError> {
    if t < 1 || t > config.block_len {
        return Err(MonteCarloError::TimeOutsideBlock { t, block_len: config.block_len });
    }
    let book = PilotBook::dft(config.pilot_len);
    let cache = EstimatorCache::new(scenario, config, &book, profile)?;
    let targets = vec![Target { cell: j, user: k, t, weights: cache.weights(scenario, j, j, k, t)? }];
    writeln!(out, "block,filter_norm,signal,interference_sum,distortion")?;
    for b in 0..blocks {
        let vals = block_samples(
            scenario, config, profile, &book, &targets, seed, b as u64, T::zero(),
        );
        let mut weighted = CompensatedSum::new();
        for (i, (l, m)) in scenario.users().enumerate() {
            weighted.add(scenario.tx_power(l, m) * vals[SAMPLE_FIELDS + i]);
        }
        writeln!(out, "{b},{},{},{},{}", vals[0], vals[1], weighted.value(), vals[2])?;
    }
    Ok(())
}

#[derive(Debug, Error)]
pub enum MonteCarloError {
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Assembly(#[from] ClosedFormError),
    #[error("standard errors need at least 2 realizations (got {got})")]
    TooFewBlocks { got: usize },
    #[error("channel use {t} lies outside the block (1..={block_len})")]
    TimeOutsideBlock { t: usize, block_len: usize },
    #[error("failed to write block-moment dump")]
    Io(#[from] std::io::Error),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_form::rate_report;

    fn two_cell() -> (Scenario<f64>, SystemConfig<f64>) {
        let scenario = Scenario::from_parts(
            2,
            1,
            vec![1.0, 0.3, 0.2, 0.8],
            vec![1.0, 0.7],
            vec![0, 0],
        )
        .unwrap();
        let config = SystemConfig {
            cells: 2,
            users_per_cell: 1,
            antennas: 6,
            block_len: 6,
            pilot_len: 2,
            noise_power: 0.1,
        };
        (scenario, config)
    }

    #[test]
    fn common_oscillator_shares_one_trajectory() {
        let (scenario, config) = two_cell();
        let book = PilotBook::dft(config.pilot_len);
        let clo = HardwareProfile::new(0.05, 0.0, 1.0, Oscillator::Common).unwrap();
        let real = simulate_block(&scenario, &config, &clo, &book, 7, 0);
        for j in 0..2 {
            for t in 1..=config.block_len {
                for a in 1..config.antennas {
                    assert_eq!(real.phase(j, a, t), real.phase(j, 0, t));
                }
            }
        }
        let slo = HardwareProfile { oscillator: Oscillator::Separate, ..clo };
        let real = simulate_block(&scenario, &config, &slo, &book, 7, 0);
        assert_ne!(real.phase(0, 0, 3), real.phase(0, 1, 3));
    }

    #[test]
    fn phase_increments_have_the_configured_variance() {
        let scenario = Scenario::from_parts(1, 1, vec![1.0], vec![1.0], vec![0]).unwrap();
        let config = SystemConfig {
            cells: 1,
            users_per_cell: 1,
            antennas: 10,
            block_len: 10,
            pilot_len: 1,
            noise_power: 0.1,
        };
        let delta = 0.02;
        let profile = HardwareProfile::new(delta, 0.0, 1.0, Oscillator::Separate).unwrap();
        let book = PilotBook::dft(1);
        let mut sq = 0.0;
        let mut count = 0usize;
        for b in 0..1000 {
            let real = simulate_block(&scenario, &config, &profile, &book, 99, b);
            for a in 0..config.antennas {
                let mut prev = 0.0;
                for t in 1..=config.block_len {
                    let inc = real.phase(0, a, t) - prev;
                    prev = real.phase(0, a, t);
                    sq += inc * inc;
                    count += 1;
                }
            }
        }
        assert_eq!(count, 100_000);
        let var = sq / count as f64;
        assert!((var / delta - 1.0).abs() < 0.02, "variance {var} vs {delta}");
    }

    #[test]
    fn clean_amplifiers_leave_no_distortion() {
        let (scenario, config) = two_cell();
        let profile = HardwareProfile::new(0.01, 0.0, 1.2, Oscillator::Separate).unwrap();
        let book = PilotBook::dft(config.pilot_len);
        let real = simulate_block(&scenario, &config, &profile, &book, 3, 5);
        for j in 0..2 {
            for t in 1..=config.block_len {
                assert!(real.distortion_at(j, t).iter().all(|d| d.re == 0.0 && d.im == 0.0));
            }
        }
        let m = estimate_moments(&scenario, &config, &profile, 0, 0, 5, 64, 3).unwrap();
        assert_eq!(m.distortion.mean, 0.0);
        assert_eq!(m.distortion.std_err, 0.0);
    }

    #[test]
    fn received_energy_matches_link_budget() {
        let (scenario, config) = two_cell();
        let profile = HardwareProfile::ideal(Oscillator::Common);
        let book = PilotBook::dft(config.pilot_len);
        let expected = config.antennas as f64
            * (1.0 * 1.0 + 0.7 * 0.3 + config.noise_power);
        let blocks = 3000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for b in 0..blocks {
            let real = simulate_block(&scenario, &config, &profile, &book, 11, b);
            let e: f64 = real.received(0, 4).iter().map(|y| y.norm_sqr()).sum();
            sum += e;
            sumsq += e * e;
        }
        let r = blocks as f64;
        let mean = sum / r;
        let se = ((sumsq - sum * sum / r) / (r - 1.0) / r).sqrt();
        assert!(
            (mean - expected).abs() < 3.0 * se,
            "mean {mean}, expected {expected}, se {se}"
        );
    }

    #[test]
    fn pilot_observation_replays_the_received_signal() {
        let (scenario, config) = two_cell();
        let profile = HardwareProfile::new(0.02, 0.05, 1.3, Oscillator::Separate).unwrap();
        let book = PilotBook::dft(config.pilot_len);
        let real = simulate_block(&scenario, &config, &profile, &book, 21, 2);
        let obs = real.pilot_observation(1, config.pilot_len);
        for i in 0..config.pilot_len {
            assert_eq!(obs.block(i), real.received(1, i + 1).as_slice());
        }
        // Pilot slots carry the deterministic effective pilot symbols.
        for (l, m) in scenario.users() {
            let pilot = book.effective(&scenario, l, m);
            for t in 1..=config.pilot_len {
                assert_eq!(real.symbol(l, m, t), pilot[t - 1]);
            }
        }
    }

    #[test]
    fn seeded_runs_are_bit_identical_across_thread_counts() {
        let (scenario, config) = two_cell();
        let profile = HardwareProfile::new(0.01, 0.02, 1.1, Oscillator::Separate).unwrap();
        // 2050 blocks straddles a chunk boundary, exercising the ragged tail.
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| {
                estimate_moments(&scenario, &config, &profile, 0, 0, 4, 2050, 42).unwrap()
            })
        };
        let serial = run(1);
        let parallel = run(3);
        let again = run(3);
        for other in [&parallel, &again] {
            assert_eq!(serial.filter_norm, other.filter_norm);
            assert_eq!(serial.signal, other.signal);
            assert_eq!(serial.distortion, other.distortion);
            assert_eq!(serial.interference, other.interference);
        }
    }

    #[test]
    fn standard_errors_shrink_like_root_blocks() {
        let (scenario, config) = two_cell();
        let profile = HardwareProfile::ideal(Oscillator::Common);
        let small = estimate_moments(&scenario, &config, &profile, 0, 0, 4, 1200, 8).unwrap();
        let big = estimate_moments(&scenario, &config, &profile, 0, 0, 4, 2400, 8).unwrap();
        let ratio = big.filter_norm.std_err / small.filter_norm.std_err;
        let expect = 0.5f64.sqrt();
        assert!((ratio / expect - 1.0).abs() < 0.10, "ratio {ratio}");
    }

    #[test]
    fn empirical_rate_tracks_the_closed_form() {
        let (scenario, config) = two_cell();
        let profile = HardwareProfile::ideal(Oscillator::Common);
        let analytic = rate_report(&scenario, &config, &profile).unwrap();
        let simulated = empirical_rate(&scenario, &config, &profile, 2000, 5).unwrap();
        for (a, s) in analytic.per_user.iter().zip(&simulated.per_user) {
            assert_eq!((a.cell, a.user), (s.cell, s.user));
            assert!(
                (s.rate / a.rate - 1.0).abs() < 0.15,
                "user ({},{}): simulated {} vs analytic {}",
                a.cell,
                a.user,
                s.rate,
                a.rate
            );
        }
        assert!((simulated.network_sum / analytic.network_sum - 1.0).abs() < 0.12);
    }

    #[test]
    fn rejects_inputs_it_cannot_measure() {
        let (scenario, config) = two_cell();
        let profile = HardwareProfile::ideal(Oscillator::Common);
        assert!(matches!(
            estimate_moments(&scenario, &config, &profile, 0, 0, 4, 1, 0),
            Err(MonteCarloError::TooFewBlocks { got: 1 })
        ));
        assert!(matches!(
            estimate_moments(&scenario, &config, &profile, 0, 0, 99, 16, 0),
            Err(MonteCarloError::TimeOutsideBlock { t: 99, .. })
        ));
    }

    #[test]
    fn block_dump_has_one_row_per_realization() {
        let (scenario, config) = two_cell();
        let profile = HardwareProfile::new(0.01, 0.02, 1.1, Oscillator::Common).unwrap();
        let mut buf = Vec::new();
        dump_block_moments(&mut buf, &scenario, &config, &profile, 0, 0, 4, 5, 17).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 6);
        assert_eq!(lines[0], "block,filter_norm,signal,interference_sum,distortion");
        assert!(lines[1].starts_with("0,"));
        assert_eq!(lines[1].split(',').count(), 5);
    }
}
