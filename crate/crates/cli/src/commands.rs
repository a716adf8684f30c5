//! The four subcommands: `sweep`, `verify`, `power`, and `scaling`.
//!
//! Every command writes a fully resolved `manifest.toml` into the output
//! directory before computing anything, so a run can always be replayed by
//! passing the manifest back via `--config`. All result files are CSV with
//! a header row; floating-point fields use the shortest representation that
//! round-trips, which makes replayed output byte-identical.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use mimo_hw::circuits::{power_report, AdcSpec, LnaSpec, LoSpec};
use mimo_hw::closed_form::{mrc_moments, rate_report, sinr};
use mimo_hw::estimator::EstimatorCache;
use mimo_hw::model::{PilotBook, ScalingExponents, Scenario};
use mimo_hw::monte_carlo::{empirical_rate, empirical_sinr, estimate_moments_at, Stat};
use mimo_hw::{build_scenario, validate};
use rayon::prelude::*;

use crate::config::{self, Experiment, HardwareKind};
use crate::error::CliError;

/// Drop the user positions, draw shadow fading, and check every invariant
/// of the resulting (config, scenario) pair.
fn prepare(exp: &Experiment) -> Result<Scenario<f64>, CliError> {
    let scenario =
        build_scenario(&exp.geometry(), &exp.shadow(), exp.tx_power_linear(), exp.seed)?;
    let config = exp.system_config(exp.antennas[0]);
    if let Some(issue) = validate(&config, &scenario).first() {
        return Err(CliError::Model(issue.to_string()));
    }
    Ok(scenario)
}

fn out_file(dir: &Path, name: &str) -> Result<BufWriter<File>, CliError> {
    let path = dir.join(name);
    let file = File::create(&path)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))?;
    Ok(BufWriter::new(file))
}

/// Write the manifest first, so even a failed run is replayable.
fn write_manifest(exp: &Experiment) -> Result<(), CliError> {
    fs::create_dir_all(&exp.out_dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", exp.out_dir.display())))?;
    let mut f = out_file(&exp.out_dir, "manifest.toml")?;
    f.write_all(config::manifest(exp).as_bytes())?;
    f.flush()?;
    Ok(())
}

fn sorted_antennas(exp: &Experiment) -> Vec<usize> {
    let mut ns = exp.antennas.clone();
    ns.sort_unstable();
    ns.dedup();
    ns
}

struct SweepRow {
    antennas: usize,
    mode: &'static str,
    hardware: &'static str,
    sum_rate: f64,
    mc_sum_rate: Option<f64>,
}

/// Closed-form sum-rate sweep over (array size, oscillator architecture,
/// hardware profile), with an optional Monte Carlo cross-check column on
/// array sizes small enough to simulate.
pub fn run_sweep(exp: &Experiment) -> Result<(), CliError> {
    write_manifest(exp)?;
    let scenario = prepare(exp)?;
    let mut sf = out_file(&exp.out_dir, "scenario.csv")?;
    mimo_hw::scenario::write_csv(&scenario, &mut sf)?;
    sf.flush()?;

    let mut jobs = Vec::new();
    for &n in &sorted_antennas(exp) {
        for &osc in &exp.oscillators {
            for &kind in &exp.hardware {
                jobs.push((n, osc, kind));
            }
        }
    }
    jobs.sort_by_key(|&(n, osc, kind)| (n, osc.label(), kind.label()));

    let results: Vec<Result<SweepRow, CliError>> = jobs
        .par_iter()
        .map(|&(n, osc, kind)| {
            let config = exp.system_config(n);
            let profile = exp.profile(kind, osc, n)?;
            let report = rate_report(&scenario, &config, &profile)?;
            let mc_sum_rate = if exp.mc_blocks > 0 && n <= exp.mc_max_antennas {
                let mc = empirical_rate(&scenario, &config, &profile, exp.mc_blocks, exp.seed)?;
                Some(mc.network_sum)
            } else {
                None
            };
            Ok(SweepRow {
                antennas: n,
                mode: osc.label(),
                hardware: kind.label(),
                sum_rate: report.network_sum,
                mc_sum_rate,
            })
        })
        .collect();

    let with_mc = exp.mc_blocks > 0;
    let mut f = out_file(&exp.out_dir, "sweep.csv")?;
    if with_mc {
        writeln!(f, "N,mode,hardware,sum_rate_bits_per_use,seed,mc_sum_rate_bits_per_use")?;
    } else {
        writeln!(f, "N,mode,hardware,sum_rate_bits_per_use,seed")?;
    }
    let mut written = 0usize;
    for result in results {
        match result {
            Ok(row) => {
                write!(
                    f,
                    "{},{},{},{},{}",
                    row.antennas, row.mode, row.hardware, row.sum_rate, exp.seed
                )?;
                if with_mc {
                    match row.mc_sum_rate {
                        Some(v) => writeln!(f, ",{v}")?,
                        None => writeln!(f, ",")?,
                    }
                } else {
                    writeln!(f)?;
                }
                written += 1;
            }
            Err(e) => {
                // Rows computed so far are already in output order; keep them.
                f.flush()?;
                return Err(e);
            }
        }
    }
    f.flush()?;
    println!("wrote {} ({written} rows)", exp.out_dir.join("sweep.csv").display());
    Ok(())
}

fn z_score(closed: f64, stat: &Stat<f64>) -> f64 {
    let diff = stat.mean - closed;
    if stat.std_err > 0.0 {
        diff / stat.std_err
    } else if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

#[allow(clippy::too_many_arguments)]
fn verify_row(
    f: &mut impl Write,
    mode: &str,
    hardware: &str,
    t: usize,
    quantity: &str,
    closed: f64,
    stat: &Stat<f64>,
    worst: &mut f64,
) -> Result<(), CliError> {
    let z = z_score(closed, stat);
    if z.abs() > *worst {
        *worst = z.abs();
    }
    writeln!(f, "{mode},{hardware},{t},{quantity},{closed},{},{},{z}", stat.mean, stat.std_err)?;
    Ok(())
}

/// Monte Carlo cross-check of the closed-form combining moments and SINR
/// for one reference user, at the first data use and at the end of the
/// block, on the smallest configured array size.
pub fn run_verify(exp: &Experiment) -> Result<(), CliError> {
    write_manifest(exp)?;
    let scenario = prepare(exp)?;
    let antennas = *sorted_antennas(exp)
        .iter()
        .find(|&&n| n <= exp.mc_max_antennas)
        .ok_or_else(|| {
            CliError::Config(
                "verify needs a sweep.antennas entry within monte_carlo.max_antennas".into(),
            )
        })?;
    let blocks = if exp.mc_blocks > 0 { exp.mc_blocks } else { 5000 };
    let config = exp.system_config(antennas);
    let book = PilotBook::dft(config.pilot_len);
    let times = [config.pilot_len + 1, config.block_len];
    let (j, k) = (0usize, 0usize);

    let mut f = out_file(&exp.out_dir, "verify.csv")?;
    writeln!(f, "mode,hardware,t,quantity,closed_form,simulated,std_err,z")?;
    for &osc in &exp.oscillators {
        for &kind in &exp.hardware {
            let profile = exp.profile(kind, osc, antennas)?;
            let cache = EstimatorCache::new(&scenario, &config, &book, &profile)?;
            let empirical = estimate_moments_at(
                &scenario, &config, &profile, j, k, &times, blocks, exp.seed,
            )?;
            let mut worst = 0f64;
            for (ti, &t) in times.iter().enumerate() {
                let closed = mrc_moments(&scenario, &config, &profile, &cache, j, k, t)?;
                let emp = &empirical[ti];
                let (mode, hw) = (osc.label(), kind.label());
                verify_row(&mut f, mode, hw, t, "filter_norm", closed.filter_norm, &emp.filter_norm, &mut worst)?;
                verify_row(&mut f, mode, hw, t, "signal", closed.signal, &emp.signal, &mut worst)?;
                verify_row(&mut f, mode, hw, t, "distortion", closed.distortion, &emp.distortion, &mut worst)?;
                for (l, m) in scenario.users() {
                    verify_row(
                        &mut f,
                        mode,
                        hw,
                        t,
                        &format!("interference_{l}_{m}"),
                        closed.interference_from(l, m),
                        emp.interference_from(l, m),
                        &mut worst,
                    )?;
                }
                let closed_sinr = sinr(&closed, &scenario, &config, &profile, j, k)?;
                let emp_sinr = empirical_sinr(emp, &scenario, &config, &profile, j, k)?;
                writeln!(f, "{mode},{hw},{t},sinr,{closed_sinr},{emp_sinr},,")?;
            }
            println!(
                "verify mode={} hardware={}: N={antennas}, R={blocks}, max moment |z| = {worst:.2}",
                osc.label(),
                kind.label()
            );
        }
    }
    f.flush()?;
    println!("wrote {}", exp.out_dir.join("verify.csv").display());
    Ok(())
}

/// Circuit power budgets per component over the sweep array sizes.
///
/// The hardware selection picks the exponents: `scaled` (or `all`) uses the
/// configured tau triple, `fixed` pins all exponents to zero, and `ideal`
/// has no finite power model at all.
pub fn run_power(exp: &Experiment) -> Result<(), CliError> {
    write_manifest(exp)?;
    let (tau1, tau2, tau3) = if exp.hardware.contains(&HardwareKind::Scaled) {
        exp.tau
    } else if exp.hardware.contains(&HardwareKind::Fixed) {
        (0.0, 0.0, 0.0)
    } else {
        return Err(CliError::Circuit(
            "ideal hardware has no finite power model; use --hardware fixed or scaled".into(),
        ));
    };
    let adc = AdcSpec::new(exp.adc_bits, exp.adc_coefficient)?;
    let lna = LnaSpec::new(exp.lna_gain, exp.lna_fom, exp.xi0())?;
    let lo = LoSpec::from_drift(exp.carrier_hz, exp.symbol_time_s, exp.phase_drift, exp.lo_fom)?;
    let ns = sorted_antennas(exp);

    let mut rows: Vec<(usize, &'static str, &'static str, f64)> = Vec::new();
    for &osc in &exp.oscillators {
        for row in power_report(&ns, &adc, &lna, &lo, tau1, tau2, tau3, osc)? {
            rows.push((row.antennas, "adc", osc.label(), row.adc_total));
            rows.push((row.antennas, "lna", osc.label(), row.lna_total));
            rows.push((row.antennas, "lo", osc.label(), row.lo_total));
        }
    }
    rows.sort_by_key(|&(n, component, mode, _)| (n, component, mode));

    let mut f = out_file(&exp.out_dir, "power.csv")?;
    writeln!(f, "N,component,mode,total_power")?;
    for (n, component, mode, total) in &rows {
        writeln!(f, "{n},{component},{mode},{total}")?;
    }
    f.flush()?;
    println!("wrote {} ({} rows)", exp.out_dir.join("power.csv").display(), rows.len());
    Ok(())
}

/// Feasibility table of the imperfection-growth exponents: for every
/// (tau1, tau2, tau3) on the grid and each oscillator architecture, whether
/// the end-of-block SINR stays bounded away from zero as the array grows.
pub fn run_scaling(exp: &Experiment) -> Result<(), CliError> {
    write_manifest(exp)?;
    let steps = (exp.max_exponent / exp.grid_step).round() as usize;
    let taus: Vec<f64> = (0..=steps)
        .map(|i| i as f64 * exp.grid_step)
        .filter(|&v| v <= exp.max_exponent * (1.0 + 1e-12))
        .collect();
    let config = exp.system_config(1);

    let mut f = out_file(&exp.out_dir, "scaling.csv")?;
    writeln!(f, "tau1,tau2,tau3,mode,satisfied")?;
    let mut rows = 0usize;
    for &t1 in &taus {
        for &t2 in &taus {
            for &t3 in &taus {
                let exponents = ScalingExponents::new(
                    t1,
                    t2,
                    t3,
                    exp.kappa0_sq(),
                    exp.xi0(),
                    exp.phase_drift,
                )?;
                for &osc in &exp.oscillators {
                    let ok = mimo_hw::scaling_law_satisfied_block(&exponents, &config, osc);
                    writeln!(f, "{t1},{t2},{t3},{},{ok}", osc.label())?;
                    rows += 1;
                }
            }
        }
    }
    f.flush()?;
    println!("wrote {} ({rows} rows)", exp.out_dir.join("scaling.csv").display());
    Ok(())
}
