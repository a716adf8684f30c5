//! Circuit-level interpretation of the abstract imperfection parameters.
//!
//! The three imperfections map onto concrete receiver hardware: the
//! distortion level κ to ADC resolution (κ = 2^{−b} for b bits), the noise
//! amplification ξ to the LNA noise figure (ξ = 10^{NF/10}), and the phase
//! drift δ to oscillator quality (δ = 4π²·f_c²·T_s·ζ). Each mapping comes
//! with a figure-of-merit power model, so the antenna-scaling exponents
//! (τ1, τ2, τ3) translate into how fast total circuit power must grow with
//! the array size.
//!
//! The paper behind these models gives scalings rather than absolute
//! powers; the power coefficients default to 1 (arbitrary units) and all
//! meaningful statements are ratios. The oscillator model treats the
//! approximate relation P_LO·ζ ≈ FoM_LO as an equality.

use crate::model::Oscillator;
use crate::num::Real;
use thiserror::Error;

/// Analog-to-digital converter: resolution and power coefficient.
///
/// Resolution is real-valued so that scaled (fractional) bit budgets can be
/// represented; physical ADCs would round.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdcSpec<T> {
    /// Resolution in bits, at least 1.
    pub bits: T,
    /// Power of a 1-unit converter: P_ADC = coefficient·2^{2·bits}.
    pub power_coefficient: T,
}

impl<T: Real> AdcSpec<T> {
    pub fn new(bits: T, power_coefficient: T) -> Result<Self, CircuitError> {
        if !(bits >= T::one()) || !bits.is_finite() {
            return Err(CircuitError::AdcBitsBelowOne);
        }
        if !(power_coefficient > T::zero()) {
            return Err(CircuitError::NonPositiveAdcCoefficient);
        }
        Ok(AdcSpec { bits, power_coefficient })
    }

    /// Distortion level contributed by quantization: κ = 2^{−bits}.
    pub fn kappa(&self) -> T {
        adc_kappa(self.bits)
    }

    /// Power of one converter at this resolution.
    pub fn power(&self) -> T {
        adc_power(self.bits, self.power_coefficient)
    }
}

/// Low-noise amplifier: gain, figure of merit and noise factor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LnaSpec<T> {
    /// Amplifier gain, linear scale.
    pub gain: T,
    /// Figure of merit: FoM = G/((ξ−1)·P).
    pub fom: T,
    /// Noise factor ξ ≥ 1 (ξ = 1 is an unattainable ideal amplifier).
    pub xi: T,
}

impl<T: Real> LnaSpec<T> {
    pub fn new(gain: T, fom: T, xi: T) -> Result<Self, CircuitError> {
        if !(gain > T::zero()) || !(fom > T::zero()) {
            return Err(CircuitError::NonPositiveLnaParameter);
        }
        if !(xi >= T::one()) {
            return Err(CircuitError::NoiseFactorBelowOne);
        }
        Ok(LnaSpec { gain, fom, xi })
    }

    /// Noise figure in dB.
    pub fn noise_figure_db(&self) -> T {
        xi_to_nf(self.xi)
    }

    /// Power of one amplifier; fails for ξ = 1.
    pub fn power(&self) -> Result<T, CircuitError> {
        lna_power(self.gain, self.xi, self.fom)
    }
}

/// Local oscillator: carrier, symbol time, phase-noise quality and power
/// figure of merit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LoSpec<T> {
    /// Carrier frequency in Hz.
    pub carrier_hz: T,
    /// Symbol time in seconds.
    pub symbol_time: T,
    /// Phase-noise quality ζ; 0 is a perfect oscillator.
    pub zeta: T,
    /// Figure of merit: P_LO·ζ = FoM.
    pub fom: T,
}

impl<T: Real> LoSpec<T> {
    pub fn new(carrier_hz: T, symbol_time: T, zeta: T, fom: T) -> Result<Self, CircuitError> {
        if !(carrier_hz > T::zero()) || !(symbol_time > T::zero()) {
            return Err(CircuitError::NonPositiveLoTiming);
        }
        if !(zeta >= T::zero()) {
            return Err(CircuitError::NegativeLoQuality);
        }
        if !(fom > T::zero()) {
            return Err(CircuitError::NonPositiveLoFom);
        }
        Ok(LoSpec { carrier_hz, symbol_time, zeta, fom })
    }

    /// Construct from a target phase-drift variance instead of ζ.
    pub fn from_drift(carrier_hz: T, symbol_time: T, delta: T, fom: T) -> Result<Self, CircuitError> {
        if !(carrier_hz > T::zero()) || !(symbol_time > T::zero()) {
            return Err(CircuitError::NonPositiveLoTiming);
        }
        if !(delta >= T::zero()) {
            return Err(CircuitError::NegativeLoQuality);
        }
        Self::new(carrier_hz, symbol_time, lo_zeta(carrier_hz, symbol_time, delta), fom)
    }

    /// Phase-drift variance this oscillator induces.
    pub fn variance(&self) -> T {
        lo_variance(self.carrier_hz, self.symbol_time, self.zeta)
    }

    /// Power of one oscillator; fails for ζ = 0.
    pub fn power(&self) -> Result<T, CircuitError> {
        lo_power(self.zeta, self.fom)
    }
}

/// Distortion level of a b-bit ADC: κ = 2^{−b}, so κ² = 2^{−2b}.
pub fn adc_kappa<T: Real>(bits: T) -> T {
    debug_assert!(bits >= T::one(), "resolutions below 1 bit are not meaningful");
    (-bits).exp2()
}

/// Power of one ADC: coefficient·2^{2b}.
pub fn adc_power<T: Real>(bits: T, coefficient: T) -> T {
    coefficient * (bits + bits).exp2()
}

/// Resolution after trading τ1/2·log2(N) bits against the array gain,
/// floored at 1 bit.
pub fn adc_scaled_bits<T: Real>(b0: T, antennas: usize, tau1: T) -> T {
    let reduced = b0 - tau1 / T::lit(2.0) * T::from_count(antennas).log2();
    reduced.max(T::one())
}

/// Total ADC power of an N-antenna receiver with the resolution scaled
/// down: equals N^{1−τ1}·P_ADC(b0) exactly while the bit floor is inactive.
pub fn total_adc_power<T: Real>(antennas: usize, b0: T, tau1: T, coefficient: T) -> T {
    T::from_count(antennas) * adc_power(adc_scaled_bits(b0, antennas, tau1), coefficient)
}

/// Noise figure (dB) to noise factor ξ.
pub fn nf_to_xi<T: Real>(nf_db: T) -> T {
    T::lit(10.0).powf(nf_db / T::lit(10.0))
}

/// Noise factor ξ to noise figure (dB).
pub fn xi_to_nf<T: Real>(xi: T) -> T {
    T::lit(10.0) * xi.log10()
}

/// Power of one LNA from the figure of merit FoM = G/((ξ−1)·P).
pub fn lna_power<T: Real>(gain: T, xi: T, fom: T) -> Result<T, CircuitError> {
    if !(gain > T::zero()) || !(fom > T::zero()) {
        return Err(CircuitError::NonPositiveLnaParameter);
    }
    if !(xi > T::one()) {
        return Err(CircuitError::NoiseFactorAtIdeal);
    }
    Ok(gain / ((xi - T::one()) * fom))
}

/// Noise figure after relaxing it by τ2·10·log10(N) dB.
pub fn lna_scaled_nf<T: Real>(nf0_db: T, antennas: usize, tau2: T) -> T {
    nf0_db + tau2 * T::lit(10.0) * T::from_count(antennas).log10()
}

/// Total LNA power of an N-antenna receiver with the noise figure relaxed.
pub fn total_lna_power<T: Real>(antennas: usize, lna: &LnaSpec<T>, tau2: T) -> Result<T, CircuitError> {
    let xi = nf_to_xi(lna_scaled_nf(xi_to_nf(lna.xi), antennas, tau2));
    Ok(T::from_count(antennas) * lna_power(lna.gain, xi, lna.fom)?)
}

/// Phase-drift variance of an oscillator: δ = 4π²·f_c²·T_s·ζ.
pub fn lo_variance<T: Real>(carrier_hz: T, symbol_time: T, zeta: T) -> T {
    let two_pi = T::lit(2.0) * T::PI();
    two_pi * two_pi * carrier_hz * carrier_hz * symbol_time * zeta
}

/// Oscillator quality required for a target drift variance (inverse of
/// [`lo_variance`]; carrier and symbol time must be positive).
pub fn lo_zeta<T: Real>(carrier_hz: T, symbol_time: T, delta: T) -> T {
    let two_pi = T::lit(2.0) * T::PI();
    delta / (two_pi * two_pi * carrier_hz * carrier_hz * symbol_time)
}

/// Power of one oscillator from P·ζ = FoM.
pub fn lo_power<T: Real>(zeta: T, fom: T) -> Result<T, CircuitError> {
    if !(fom > T::zero()) {
        return Err(CircuitError::NonPositiveLoFom);
    }
    if !(zeta > T::zero()) {
        return Err(CircuitError::PerfectOscillatorPower);
    }
    Ok(fom / zeta)
}

/// Total oscillator power of an N-antenna receiver. A common oscillator is
/// one physical device whose quality may not degrade with N (τ3 must be 0);
/// separate oscillators may each relax their quality by 1 + τ3·ln N.
pub fn total_lo_power<T: Real>(
    antennas: usize,
    zeta0: T,
    tau3: T,
    fom: T,
    oscillator: Oscillator,
) -> Result<T, CircuitError> {
    if !(tau3 >= T::zero()) {
        return Err(CircuitError::NegativeExponent);
    }
    let single = lo_power(zeta0, fom)?;
    match oscillator {
        Oscillator::Common => {
            if tau3 > T::zero() {
                return Err(CircuitError::CommonOscillatorCannotScale);
            }
            Ok(single)
        }
        Oscillator::Separate => {
            let n = T::from_count(antennas);
            Ok(n * single / (T::one() + tau3 * n.ln()))
        }
    }
}

/// Total circuit power of an N-antenna receiver, by component.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerRow<T> {
    pub antennas: usize,
    pub adc_total: T,
    pub lna_total: T,
    pub lo_total: T,
}

/// Evaluate all three power models over a list of antenna counts, with the
/// imperfection-scaling exponents applied to the hardware quality.
pub fn power_report<T: Real>(
    antenna_counts: &[usize],
    adc: &AdcSpec<T>,
    lna: &LnaSpec<T>,
    lo: &LoSpec<T>,
    tau1: T,
    tau2: T,
    tau3: T,
    oscillator: Oscillator,
) -> Result<Vec<PowerRow<T>>, CircuitError> {
    antenna_counts
        .iter()
        .map(|&n| {
            Ok(PowerRow {
                antennas: n,
                adc_total: total_adc_power(n, adc.bits, tau1, adc.power_coefficient),
                lna_total: total_lna_power(n, lna, tau2)?,
                lo_total: total_lo_power(n, lo.zeta, tau3, lo.fom, oscillator)?,
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, Error, PartialEq, Eq)]
pub enum CircuitError {
    #[error("ADC resolution must be at least 1 bit")]
    AdcBitsBelowOne,
    #[error("ADC power coefficient must be positive")]
    NonPositiveAdcCoefficient,
    #[error("LNA gain and figure of merit must be positive")]
    NonPositiveLnaParameter,
    #[error("LNA noise factor must be at least 1")]
    NoiseFactorBelowOne,
    #[error("an ideal LNA (noise factor 1) would need infinite power")]
    NoiseFactorAtIdeal,
    #[error("oscillator carrier frequency and symbol time must be positive")]
    NonPositiveLoTiming,
    #[error("oscillator figure of merit must be positive")]
    NonPositiveLoFom,
    #[error("oscillator phase-noise quality cannot be negative")]
    NegativeLoQuality,
    #[error("a perfect oscillator (zeta = 0) has no finite power model")]
    PerfectOscillatorPower,
    #[error("scaling exponents must be nonnegative")]
    NegativeExponent,
    #[error("a common oscillator cannot relax its quality with the array size")]
    CommonOscillatorCannotScale,
}
