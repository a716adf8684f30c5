//! Experiment configuration: defaults, file loading, and manifest emission.
//!
//! Configuration lives in a TOML file with flat `key = value` sections. Every
//! key is optional; an empty file (or no `--config` at all) resolves to the
//! reference urban-macro setup: a 4x4 torus of 250 m cells with eight
//! 45-degree sectors per cell, 500-use coherence blocks with 8 pilot uses,
//! -47 dBm/Hz transmit power over -174 dBm/Hz noise, and baseline hardware
//! with 8-bit converters, a 2 dB receiver noise figure, and phase-drift
//! variance 1.6e-4 per use.
//!
//! Unknown keys warn on stderr and are ignored; a value of the wrong type is
//! an error; a value that violates a model invariant is an error naming the
//! key. The `manifest` function serializes a fully resolved configuration
//! back into the same schema, so a manifest written next to one run's output
//! can be passed back via `--config` to replay the run byte-for-byte.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use mimo_hw::circuits::{adc_kappa, nf_to_xi};
use mimo_hw::model::{HardwareProfile, ScalingExponents, SystemConfig};
use mimo_hw::scenario::{Geometry, ShadowFading};
use mimo_hw::{dbm_per_hz_to_linear, Oscillator};
use toml::{Table, Value};

use crate::error::CliError;

/// Which hardware quality to assume at each sweep point.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum HardwareKind {
    /// No impairments at all: zero drift, zero distortion, unit noise figure.
    Ideal,
    /// The configured baseline impairments, independent of the array size.
    Fixed,
    /// Baseline impairments relaxed with array size via the tau exponents.
    Scaled,
}

impl HardwareKind {
    pub fn label(self) -> &'static str {
        match self {
            HardwareKind::Ideal => "ideal",
            HardwareKind::Fixed => "fixed",
            HardwareKind::Scaled => "scaled",
        }
    }
}

/// A fully resolved experiment description.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub seed: u64,
    // [cells]
    pub grid: usize,
    pub cell_side_m: f64,
    pub min_distance_m: f64,
    pub sectors: usize,
    // [radio]
    pub block_len: usize,
    pub pilot_len: usize,
    pub tx_power_dbm_per_hz: f64,
    pub noise_dbm_per_hz: f64,
    pub shadow_std: f64,
    // [sweep]
    pub antennas: Vec<usize>,
    // [hardware]
    pub hardware: Vec<HardwareKind>,
    pub oscillators: Vec<Oscillator>,
    pub adc_bits: f64,
    pub noise_figure_db: f64,
    pub phase_drift: f64,
    pub tau: (f64, f64, f64),
    // [monte_carlo]
    pub mc_blocks: usize,
    pub mc_max_antennas: usize,
    // [circuits]
    pub carrier_hz: f64,
    pub symbol_time_s: f64,
    pub adc_coefficient: f64,
    pub lna_gain: f64,
    pub lna_fom: f64,
    pub lo_fom: f64,
    // [scaling]
    pub grid_step: f64,
    pub max_exponent: f64,
    // [output]
    pub out_dir: PathBuf,
}

impl Default for Experiment {
    fn default() -> Self {
        Experiment {
            seed: 1,
            grid: 4,
            cell_side_m: 250.0,
            min_distance_m: 35.0,
            sectors: 8,
            block_len: 500,
            pilot_len: 8,
            tx_power_dbm_per_hz: -47.0,
            noise_dbm_per_hz: -174.0,
            shadow_std: 0.5,
            antennas: vec![10, 20, 50, 100, 200, 400],
            hardware: vec![HardwareKind::Ideal, HardwareKind::Fixed, HardwareKind::Scaled],
            oscillators: vec![Oscillator::Common, Oscillator::Separate],
            adc_bits: 8.0,
            noise_figure_db: 2.0,
            phase_drift: 1.6e-4,
            tau: (0.5, 0.5, 0.0),
            mc_blocks: 0,
            mc_max_antennas: 64,
            carrier_hz: 2e9,
            symbol_time_s: 1e-7,
            adc_coefficient: 1.0,
            lna_gain: 1.0,
            lna_fom: 1.0,
            lo_fom: 1.0,
            grid_step: 0.25,
            max_exponent: 1.0,
            out_dir: PathBuf::from("results"),
        }
    }
}

impl Experiment {
    /// Cell layout for scenario generation.
    pub fn geometry(&self) -> Geometry<f64> {
        Geometry {
            cells_per_side: self.grid,
            cell_side: self.cell_side_m,
            min_distance: self.min_distance_m,
            sectors_per_cell: self.sectors,
        }
    }

    pub fn shadow(&self) -> ShadowFading<f64> {
        ShadowFading { std_dev: self.shadow_std }
    }

    pub fn tx_power_linear(&self) -> f64 {
        dbm_per_hz_to_linear(self.tx_power_dbm_per_hz)
    }

    pub fn noise_linear(&self) -> f64 {
        dbm_per_hz_to_linear(self.noise_dbm_per_hz)
    }

    /// Baseline additive-distortion variance implied by the converter bits.
    pub fn kappa0_sq(&self) -> f64 {
        let k = adc_kappa(self.adc_bits);
        k * k
    }

    /// Baseline noise amplification implied by the receiver noise figure.
    pub fn xi0(&self) -> f64 {
        nf_to_xi(self.noise_figure_db)
    }

    /// System dimensions for a given array size.
    pub fn system_config(&self, antennas: usize) -> SystemConfig<f64> {
        SystemConfig {
            cells: self.grid * self.grid,
            users_per_cell: self.sectors,
            antennas,
            block_len: self.block_len,
            pilot_len: self.pilot_len,
            noise_power: self.noise_linear(),
        }
    }

    /// The impairment-relaxation exponents paired with the baseline values.
    pub fn exponents(&self) -> Result<ScalingExponents<f64>, CliError> {
        ScalingExponents::new(
            self.tau.0,
            self.tau.1,
            self.tau.2,
            self.kappa0_sq(),
            self.xi0(),
            self.phase_drift,
        )
        .map_err(CliError::from)
    }

    /// The hardware profile for one sweep point.
    pub fn profile(
        &self,
        kind: HardwareKind,
        oscillator: Oscillator,
        antennas: usize,
    ) -> Result<HardwareProfile<f64>, CliError> {
        match kind {
            HardwareKind::Ideal => Ok(HardwareProfile::ideal(oscillator)),
            HardwareKind::Fixed => {
                HardwareProfile::new(self.phase_drift, self.kappa0_sq(), self.xi0(), oscillator)
                    .map_err(CliError::from)
            }
            HardwareKind::Scaled => {
                Ok(mimo_hw::apply_scaling(&self.exponents()?, antennas, oscillator))
            }
        }
    }
}

/// Load a configuration file (or the defaults when `path` is `None`).
///
/// Returns the resolved experiment plus any unknown-key warnings, which the
/// caller prints to stderr.
pub fn load(path: Option<&Path>) -> Result<(Experiment, Vec<String>), CliError> {
    let mut exp = Experiment::default();
    let mut warnings = Vec::new();
    let Some(path) = path else {
        return Ok((exp, warnings));
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
    let table: Table = text
        .parse()
        .map_err(|e| CliError::Config(format!("cannot parse config {}: {e}", path.display())))?;

    for (key, value) in &table {
        match key.as_str() {
            "seed" => exp.seed = as_seed(value, "seed")?,
            "meta" => {} // written by `manifest`; informational on the way back in
            "cells" => apply_cells(section(value, "cells")?, &mut exp, &mut warnings)?,
            "radio" => apply_radio(section(value, "radio")?, &mut exp, &mut warnings)?,
            "sweep" => apply_sweep(section(value, "sweep")?, &mut exp, &mut warnings)?,
            "hardware" => apply_hardware(section(value, "hardware")?, &mut exp, &mut warnings)?,
            "monte_carlo" => {
                apply_monte_carlo(section(value, "monte_carlo")?, &mut exp, &mut warnings)?
            }
            "circuits" => apply_circuits(section(value, "circuits")?, &mut exp, &mut warnings)?,
            "scaling" => apply_scaling_section(section(value, "scaling")?, &mut exp, &mut warnings)?,
            "output" => apply_output(section(value, "output")?, &mut exp, &mut warnings)?,
            other => warnings.push(format!("unknown config key '{other}' (ignored)")),
        }
    }

    validate(&exp)?;
    Ok((exp, warnings))
}

/// Reject resolved values that violate a model invariant, naming the key.
fn validate(exp: &Experiment) -> Result<(), CliError> {
    let bad = |key: &str, why: &str| Err(CliError::Config(format!("invalid '{key}': {why}")));
    if exp.grid == 0 {
        return bad("cells.grid", "need at least one cell per side");
    }
    if exp.cell_side_m <= 0.0 {
        return bad("cells.side_m", "cell side must be positive");
    }
    if exp.min_distance_m < 0.0 || exp.min_distance_m >= exp.cell_side_m {
        return bad("cells.min_distance_m", "must lie in [0, side_m)");
    }
    if exp.sectors == 0 {
        return bad("cells.sectors", "need at least one user per cell");
    }
    if exp.pilot_len == 0 {
        return bad("radio.pilot_len", "need at least one pilot use");
    }
    if exp.block_len <= exp.pilot_len {
        return bad(
            "radio.block_len",
            "coherence block must be longer than the pilot phase",
        );
    }
    if exp.sectors > exp.pilot_len {
        return bad(
            "radio.pilot_len",
            "orthogonal pilots need pilot_len >= cells.sectors",
        );
    }
    if exp.shadow_std < 0.0 {
        return bad("radio.shadow_std", "standard deviation must be nonnegative");
    }
    if exp.antennas.is_empty() {
        return bad("sweep.antennas", "need at least one array size");
    }
    if exp.antennas.iter().any(|&n| n == 0) {
        return bad("sweep.antennas", "array sizes must be positive");
    }
    if exp.adc_bits < 1.0 || !exp.adc_bits.is_finite() {
        return bad("hardware.adc_bits", "need at least one bit of resolution");
    }
    if exp.noise_figure_db < 0.0 {
        return bad("hardware.noise_figure_db", "noise figure cannot be negative");
    }
    if exp.phase_drift < 0.0 {
        return bad("hardware.phase_drift", "drift variance cannot be negative");
    }
    if exp.tau.0 < 0.0 || exp.tau.1 < 0.0 || exp.tau.2 < 0.0 {
        return bad("hardware.tau1/tau2/tau3", "exponents cannot be negative");
    }
    if exp.carrier_hz <= 0.0 || exp.symbol_time_s <= 0.0 {
        return bad("circuits.carrier_hz/symbol_time_s", "must be positive");
    }
    if exp.adc_coefficient <= 0.0 || exp.lna_gain <= 0.0 || exp.lna_fom <= 0.0 || exp.lo_fom <= 0.0
    {
        return bad("circuits.*", "power coefficients must be positive");
    }
    if exp.grid_step <= 0.0 {
        return bad("scaling.grid_step", "step must be positive");
    }
    if exp.max_exponent < 0.0 {
        return bad("scaling.max_exponent", "must be nonnegative");
    }
    Ok(())
}

fn section<'v>(value: &'v Value, name: &str) -> Result<&'v Table, CliError> {
    value
        .as_table()
        .ok_or_else(|| CliError::Config(format!("'{name}' must be a [{name}] section")))
}

fn apply_cells(t: &Table, exp: &mut Experiment, warn: &mut Vec<String>) -> Result<(), CliError> {
    for (key, value) in t {
        match key.as_str() {
            "grid" => exp.grid = as_usize(value, "cells.grid")?,
            "side_m" => exp.cell_side_m = as_f64(value, "cells.side_m")?,
            "min_distance_m" => exp.min_distance_m = as_f64(value, "cells.min_distance_m")?,
            "sectors" => exp.sectors = as_usize(value, "cells.sectors")?,
            other => warn.push(format!("unknown config key 'cells.{other}' (ignored)")),
        }
    }
    Ok(())
}

fn apply_radio(t: &Table, exp: &mut Experiment, warn: &mut Vec<String>) -> Result<(), CliError> {
    for (key, value) in t {
        match key.as_str() {
            "block_len" => exp.block_len = as_usize(value, "radio.block_len")?,
            "pilot_len" => exp.pilot_len = as_usize(value, "radio.pilot_len")?,
            "tx_power_dbm_per_hz" => {
                exp.tx_power_dbm_per_hz = as_f64(value, "radio.tx_power_dbm_per_hz")?
            }
            "noise_dbm_per_hz" => exp.noise_dbm_per_hz = as_f64(value, "radio.noise_dbm_per_hz")?,
            "shadow_std" => exp.shadow_std = as_f64(value, "radio.shadow_std")?,
            other => warn.push(format!("unknown config key 'radio.{other}' (ignored)")),
        }
    }
    Ok(())
}

fn apply_sweep(t: &Table, exp: &mut Experiment, warn: &mut Vec<String>) -> Result<(), CliError> {
    for (key, value) in t {
        match key.as_str() {
            "antennas" => exp.antennas = as_usize_list(value, "sweep.antennas")?,
            other => warn.push(format!("unknown config key 'sweep.{other}' (ignored)")),
        }
    }
    Ok(())
}

fn apply_hardware(t: &Table, exp: &mut Experiment, warn: &mut Vec<String>) -> Result<(), CliError> {
    for (key, value) in t {
        match key.as_str() {
            "profile" => exp.hardware = parse_hardware(as_str(value, "hardware.profile")?)?,
            "oscillator" => {
                exp.oscillators = parse_oscillators(as_str(value, "hardware.oscillator")?)?
            }
            "adc_bits" => exp.adc_bits = as_f64(value, "hardware.adc_bits")?,
            "noise_figure_db" => exp.noise_figure_db = as_f64(value, "hardware.noise_figure_db")?,
            "phase_drift" => exp.phase_drift = as_f64(value, "hardware.phase_drift")?,
            "tau1" => exp.tau.0 = as_f64(value, "hardware.tau1")?,
            "tau2" => exp.tau.1 = as_f64(value, "hardware.tau2")?,
            "tau3" => exp.tau.2 = as_f64(value, "hardware.tau3")?,
            other => warn.push(format!("unknown config key 'hardware.{other}' (ignored)")),
        }
    }
    Ok(())
}

fn apply_monte_carlo(
    t: &Table,
    exp: &mut Experiment,
    warn: &mut Vec<String>,
) -> Result<(), CliError> {
    for (key, value) in t {
        match key.as_str() {
            "blocks" => exp.mc_blocks = as_usize(value, "monte_carlo.blocks")?,
            "max_antennas" => exp.mc_max_antennas = as_usize(value, "monte_carlo.max_antennas")?,
            other => warn.push(format!("unknown config key 'monte_carlo.{other}' (ignored)")),
        }
    }
    Ok(())
}

fn apply_circuits(t: &Table, exp: &mut Experiment, warn: &mut Vec<String>) -> Result<(), CliError> {
    for (key, value) in t {
        match key.as_str() {
            "carrier_hz" => exp.carrier_hz = as_f64(value, "circuits.carrier_hz")?,
            "symbol_time_s" => exp.symbol_time_s = as_f64(value, "circuits.symbol_time_s")?,
            "adc_coefficient" => exp.adc_coefficient = as_f64(value, "circuits.adc_coefficient")?,
            "lna_gain" => exp.lna_gain = as_f64(value, "circuits.lna_gain")?,
            "lna_fom" => exp.lna_fom = as_f64(value, "circuits.lna_fom")?,
            "lo_fom" => exp.lo_fom = as_f64(value, "circuits.lo_fom")?,
            other => warn.push(format!("unknown config key 'circuits.{other}' (ignored)")),
        }
    }
    Ok(())
}

fn apply_scaling_section(
    t: &Table,
    exp: &mut Experiment,
    warn: &mut Vec<String>,
) -> Result<(), CliError> {
    for (key, value) in t {
        match key.as_str() {
            "grid_step" => exp.grid_step = as_f64(value, "scaling.grid_step")?,
            "max_exponent" => exp.max_exponent = as_f64(value, "scaling.max_exponent")?,
            other => warn.push(format!("unknown config key 'scaling.{other}' (ignored)")),
        }
    }
    Ok(())
}

fn apply_output(t: &Table, exp: &mut Experiment, warn: &mut Vec<String>) -> Result<(), CliError> {
    for (key, value) in t {
        match key.as_str() {
            "dir" => exp.out_dir = PathBuf::from(as_str(value, "output.dir")?),
            other => warn.push(format!("unknown config key 'output.{other}' (ignored)")),
        }
    }
    Ok(())
}

pub fn parse_hardware(s: &str) -> Result<Vec<HardwareKind>, CliError> {
    match s {
        "ideal" => Ok(vec![HardwareKind::Ideal]),
        "fixed" => Ok(vec![HardwareKind::Fixed]),
        "scaled" => Ok(vec![HardwareKind::Scaled]),
        "all" => Ok(vec![HardwareKind::Ideal, HardwareKind::Fixed, HardwareKind::Scaled]),
        other => Err(CliError::Config(format!(
            "invalid 'hardware.profile': '{other}' (expected ideal, fixed, scaled, or all)"
        ))),
    }
}

pub fn parse_oscillators(s: &str) -> Result<Vec<Oscillator>, CliError> {
    match s {
        "clo" => Ok(vec![Oscillator::Common]),
        "slo" => Ok(vec![Oscillator::Separate]),
        "both" => Ok(vec![Oscillator::Common, Oscillator::Separate]),
        other => Err(CliError::Config(format!(
            "invalid 'hardware.oscillator': '{other}' (expected clo, slo, or both)"
        ))),
    }
}

fn type_err(key: &str, expected: &str) -> CliError {
    CliError::Config(format!("key '{key}' expects {expected}"))
}

fn as_f64(v: &Value, key: &str) -> Result<f64, CliError> {
    match v {
        Value::Float(x) => Ok(*x),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(type_err(key, "a number")),
    }
}

fn as_usize(v: &Value, key: &str) -> Result<usize, CliError> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as usize),
        _ => Err(type_err(key, "a nonnegative integer")),
    }
}

/// Seeds accept both an integer and a quoted integer; the manifest always
/// writes the quoted form so that seeds above i64::MAX survive the TOML
/// integer range.
fn as_seed(v: &Value, key: &str) -> Result<u64, CliError> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        Value::String(s) => s
            .parse::<u64>()
            .map_err(|_| type_err(key, "a nonnegative integer (possibly quoted)")),
        _ => Err(type_err(key, "a nonnegative integer (possibly quoted)")),
    }
}

fn as_str<'v>(v: &'v Value, key: &str) -> Result<&'v str, CliError> {
    v.as_str().ok_or_else(|| type_err(key, "a string"))
}

fn as_usize_list(v: &Value, key: &str) -> Result<Vec<usize>, CliError> {
    let arr = v
        .as_array()
        .ok_or_else(|| type_err(key, "an array of positive integers"))?;
    arr.iter().map(|item| as_usize(item, key)).collect()
}

fn hardware_word(kinds: &[HardwareKind]) -> &'static str {
    match kinds {
        [HardwareKind::Ideal] => "ideal",
        [HardwareKind::Fixed] => "fixed",
        [HardwareKind::Scaled] => "scaled",
        _ => "all",
    }
}

fn oscillator_word(oscs: &[Oscillator]) -> &'static str {
    match oscs {
        [Oscillator::Common] => "clo",
        [Oscillator::Separate] => "slo",
        _ => "both",
    }
}

/// Serialize the fully resolved configuration, ready to be replayed.
pub fn manifest(exp: &Experiment) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# Resolved run manifest; pass back via --config to replay.");
    let _ = writeln!(s, "seed = \"{}\"", exp.seed);
    let _ = writeln!(s);
    let _ = writeln!(s, "[meta]");
    let _ = writeln!(s, "version = \"{}\"", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(s);
    let _ = writeln!(s, "[cells]");
    let _ = writeln!(s, "grid = {}", exp.grid);
    let _ = writeln!(s, "side_m = {}", exp.cell_side_m);
    let _ = writeln!(s, "min_distance_m = {}", exp.min_distance_m);
    let _ = writeln!(s, "sectors = {}", exp.sectors);
    let _ = writeln!(s);
    let _ = writeln!(s, "[radio]");
    let _ = writeln!(s, "block_len = {}", exp.block_len);
    let _ = writeln!(s, "pilot_len = {}", exp.pilot_len);
    let _ = writeln!(s, "tx_power_dbm_per_hz = {}", exp.tx_power_dbm_per_hz);
    let _ = writeln!(s, "noise_dbm_per_hz = {}", exp.noise_dbm_per_hz);
    let _ = writeln!(s, "shadow_std = {}", exp.shadow_std);
    let _ = writeln!(s);
    let _ = writeln!(s, "[sweep]");
    let ns: Vec<String> = exp.antennas.iter().map(|n| n.to_string()).collect();
    let _ = writeln!(s, "antennas = [{}]", ns.join(", "));
    let _ = writeln!(s);
    let _ = writeln!(s, "[hardware]");
    let _ = writeln!(s, "profile = \"{}\"", hardware_word(&exp.hardware));
    let _ = writeln!(s, "oscillator = \"{}\"", oscillator_word(&exp.oscillators));
    let _ = writeln!(s, "adc_bits = {}", exp.adc_bits);
    let _ = writeln!(s, "noise_figure_db = {}", exp.noise_figure_db);
    let _ = writeln!(s, "phase_drift = {}", exp.phase_drift);
    let _ = writeln!(s, "tau1 = {}", exp.tau.0);
    let _ = writeln!(s, "tau2 = {}", exp.tau.1);
    let _ = writeln!(s, "tau3 = {}", exp.tau.2);
    let _ = writeln!(s);
    let _ = writeln!(s, "[monte_carlo]");
    let _ = writeln!(s, "blocks = {}", exp.mc_blocks);
    let _ = writeln!(s, "max_antennas = {}", exp.mc_max_antennas);
    let _ = writeln!(s);
    let _ = writeln!(s, "[circuits]");
    let _ = writeln!(s, "carrier_hz = {}", exp.carrier_hz);
    let _ = writeln!(s, "symbol_time_s = {}", exp.symbol_time_s);
    let _ = writeln!(s, "adc_coefficient = {}", exp.adc_coefficient);
    let _ = writeln!(s, "lna_gain = {}", exp.lna_gain);
    let _ = writeln!(s, "lna_fom = {}", exp.lna_fom);
    let _ = writeln!(s, "lo_fom = {}", exp.lo_fom);
    let _ = writeln!(s);
    let _ = writeln!(s, "[scaling]");
    let _ = writeln!(s, "grid_step = {}", exp.grid_step);
    let _ = writeln!(s, "max_exponent = {}", exp.max_exponent);
    let _ = writeln!(s);
    let _ = writeln!(s, "[output]");
    let _ = writeln!(s, "dir = \"{}\"", exp.out_dir.display());
    s
}
