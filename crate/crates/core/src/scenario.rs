//! Network generator: a square grid of cells on a torus, one base station
//! at each cell center, users dropped uniformly into angular sectors, and
//! distance-based gains with log-normal shadowing.

use crate::model::Scenario;
use crate::num::Real;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use std::io::{self, BufRead, Write};
use thiserror::Error;

/// Square-grid layout. The world wraps around at the edges so every cell
/// sees the same interference geometry.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Geometry<T> {
    /// Cells per side of the square grid (total cells = side²).
    pub cells_per_side: usize,
    /// Cell edge length in meters.
    pub cell_side: T,
    /// Minimum user-to-base-station distance in meters.
    pub min_distance: T,
    /// Angular sectors per cell; one user is dropped into each.
    pub sectors_per_cell: usize,
}

impl<T: Real> Default for Geometry<T> {
    /// The 16-cell reference layout: 4×4 grid of 250 m cells, 35 m exclusion
    /// radius, 8 sectors.
    fn default() -> Self {
        Geometry {
            cells_per_side: 4,
            cell_side: T::lit(250.0),
            min_distance: T::lit(35.0),
            sectors_per_cell: 8,
        }
    }
}

impl<T: Real> Geometry<T> {
    pub fn cell_count(&self) -> usize {
        self.cells_per_side * self.cells_per_side
    }

    pub fn world_side(&self) -> T {
        self.cell_side * T::from_count(self.cells_per_side)
    }

    /// Base station of cell `l` sits at the cell center.
    pub fn bs_position(&self, l: usize) -> [T; 2] {
        let gx = l % self.cells_per_side;
        let gy = l / self.cells_per_side;
        let half = T::lit(0.5);
        [
            (T::from_count(gx) + half) * self.cell_side,
            (T::from_count(gy) + half) * self.cell_side,
        ]
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.cells_per_side == 0 || self.sectors_per_cell == 0 {
            return Err(ScenarioError::EmptyGeometry);
        }
        if !(self.cell_side > T::zero()) {
            return Err(ScenarioError::EmptyGeometry);
        }
        // Users must fit between the exclusion radius and the cell edge.
        if !(self.min_distance >= T::zero())
            || self.min_distance >= self.cell_side * T::lit(0.5)
        {
            return Err(ScenarioError::ExclusionRadiusTooLarge);
        }
        Ok(())
    }
}

/// Log-normal shadow fading; `std_dev` applies to the base-10 exponent of
/// the gain model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShadowFading<T> {
    pub std_dev: T,
}

impl<T: Real> Default for ShadowFading<T> {
    fn default() -> Self {
        ShadowFading { std_dev: T::lit(0.5) }
    }
}

/// Torus distance: per-axis displacement is the shorter way around.
pub fn wrap_distance<T: Real>(a: [T; 2], b: [T; 2], world: T) -> T {
    let mut acc = T::zero();
    for ax in 0..2 {
        let d = (a[ax] - b[ax]).abs();
        let d = d.min(world - d);
        acc += d * d;
    }
    acc.sqrt()
}

/// Average channel gain over distance `d` meters with shadow realization
/// `shadow` (base-10 exponent units): `10^(shadow - 1.53) / d^3.76`.
pub fn pathloss<T: Real>(d: T, shadow: T) -> T {
    T::lit(10.0).powf(shadow - T::lit(1.53)) / d.powf(T::lit(3.76))
}

/// Drop one user per sector of every cell, uniformly over the part of the
/// cell square that lies in the sector wedge and beyond the exclusion
/// radius. Returns positions row-major `[cell][sector]`.
pub fn drop_ues<T: Real>(geometry: &Geometry<T>, seed: u64) -> Result<Vec<[T; 2]>, ScenarioError> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    drop_ues_rng(geometry, &mut rng)
}

fn drop_ues_rng<T: Real, R: Rng>(
    geometry: &Geometry<T>,
    rng: &mut R,
) -> Result<Vec<[T; 2]>, ScenarioError> {
    geometry.validate()?;
    let cells = geometry.cell_count();
    let sectors = geometry.sectors_per_cell;
    let side = geometry.cell_side;
    let half = side * T::lit(0.5);
    let wedge = T::lit(2.0) * T::PI() / T::from_count(sectors);
    let mut out = Vec::with_capacity(cells * sectors);
    for cell in 0..cells {
        let gx = T::from_count(cell % geometry.cells_per_side) * side;
        let gy = T::from_count(cell / geometry.cells_per_side) * side;
        for sector in 0..sectors {
            let mut placed = None;
            for _ in 0..10_000 {
                let x = T::unit_uniform(rng) * side;
                let y = T::unit_uniform(rng) * side;
                let rx = x - half;
                let ry = y - half;
                let dist = (rx * rx + ry * ry).sqrt();
                if dist < geometry.min_distance {
                    continue;
                }
                let mut angle = ry.atan2(rx);
                if angle < T::zero() {
                    angle += T::lit(2.0) * T::PI();
                }
                let mut s = (angle / wedge).floor().to_usize().unwrap_or(0);
                if s >= sectors {
                    s = sectors - 1; // angle == 2π after rounding
                }
                if s == sector {
                    placed = Some([gx + x, gy + y]);
                    break;
                }
            }
            match placed {
                Some(p) => out.push(p),
                None => return Err(ScenarioError::UserDropFailed { cell, sector }),
            }
        }
    }
    Ok(out)
}

/// Generate the full link-gain scenario: drop users, draw shadow fading for
/// every (base station, user) pair, convert distances to gains, and assign
/// pilot `k` to the user of sector `k` in every cell (reuse factor 1).
///
/// `tx_power` is the per-user transmit density in linear mW/Hz.
pub fn build_scenario<T: Real>(
    geometry: &Geometry<T>,
    shadow: &ShadowFading<T>,
    tx_power: T,
    seed: u64,
) -> Result<Scenario<T>, ScenarioError> {
    if !(tx_power > T::zero()) {
        return Err(ScenarioError::NonPositivePower);
    }
    if !(shadow.std_dev >= T::zero()) {
        return Err(ScenarioError::NegativeShadowStd);
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let positions = drop_ues_rng(geometry, &mut rng)?;
    let cells = geometry.cell_count();
    let users = geometry.sectors_per_cell;
    let world = geometry.world_side();
    let mut lambda = Vec::with_capacity(cells * cells * users);
    for j in 0..cells {
        let bs = geometry.bs_position(j);
        for l in 0..cells {
            for k in 0..users {
                let ue = positions[l * users + k];
                let d = wrap_distance(bs, ue, world);
                debug_assert!(j != l || d >= geometry.min_distance);
                let s = T::standard_normal(&mut rng) * shadow.std_dev;
                lambda.push(pathloss(d, s));
            }
        }
    }
    let power = vec![tx_power; cells * users];
    let pilot: Vec<usize> = (0..cells).flat_map(|_| 0..users).collect();
    Scenario::from_parts(cells, users, lambda, power, pilot)
        .map_err(|_| ScenarioError::EmptyGeometry)
}

/// Write a scenario as flat CSV, one row per (base station, cell, user).
pub fn write_csv<T: Real, W: Write>(scenario: &Scenario<T>, w: &mut W) -> io::Result<()> {
    writeln!(w, "j,l,k,lambda,pilot_index,p")?;
    for j in 0..scenario.cells() {
        for (l, k) in scenario.users() {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                j,
                l,
                k,
                scenario.attenuation(j, l, k),
                scenario.pilot_of(l, k),
                scenario.tx_power(l, k)
            )?;
        }
    }
    Ok(())
}

/// Read a scenario written by [`write_csv`]. Dimensions are inferred from
/// the indices; every (j, l, k) triple must appear exactly once and the
/// per-user columns must agree across base stations.
pub fn read_csv<T: Real, R: BufRead>(r: R) -> Result<Scenario<T>, ScenarioError> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| ScenarioError::Csv { line: 0, reason: "empty file".into() })?
        .map_err(ScenarioError::from)?;
    if header.trim() != "j,l,k,lambda,pilot_index,p" {
        return Err(ScenarioError::Csv {
            line: 1,
            reason: format!("unexpected header `{header}`"),
        });
    }
    struct Row<T> {
        j: usize,
        l: usize,
        k: usize,
        lambda: T,
        pilot: usize,
        power: T,
    }
    let mut rows: Vec<Row<T>> = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(ScenarioError::Csv {
                line: line_no,
                reason: format!("expected 6 fields, found {}", fields.len()),
            });
        }
        let bad = |what: &str| ScenarioError::Csv {
            line: line_no,
            reason: format!("cannot parse {what}"),
        };
        rows.push(Row {
            j: fields[0].trim().parse().map_err(|_| bad("j"))?,
            l: fields[1].trim().parse().map_err(|_| bad("l"))?,
            k: fields[2].trim().parse().map_err(|_| bad("k"))?,
            lambda: fields[3]
                .trim()
                .parse::<f64>()
                .ok()
                .map(T::lit)
                .ok_or_else(|| bad("lambda"))?,
            pilot: fields[4].trim().parse().map_err(|_| bad("pilot_index"))?,
            power: fields[5]
                .trim()
                .parse::<f64>()
                .ok()
                .map(T::lit)
                .ok_or_else(|| bad("p"))?,
        });
    }
    if rows.is_empty() {
        return Err(ScenarioError::Csv { line: 1, reason: "no data rows".into() });
    }
    let cells = rows.iter().map(|r| r.j.max(r.l)).max().unwrap() + 1;
    let users = rows.iter().map(|r| r.k).max().unwrap() + 1;
    let expected = cells * cells * users;
    if rows.len() != expected {
        return Err(ScenarioError::Csv {
            line: 1,
            reason: format!("expected {expected} rows for {cells} cells x {users} users, found {}", rows.len()),
        });
    }
    let nan = T::nan();
    let mut lambda = vec![nan; cells * cells * users];
    let mut power = vec![nan; cells * users];
    let mut pilot = vec![usize::MAX; cells * users];
    for row in &rows {
        let li = (row.j * cells + row.l) * users + row.k;
        if !lambda[li].is_nan() {
            return Err(ScenarioError::Csv {
                line: 1,
                reason: format!("duplicate row for ({},{},{})", row.j, row.l, row.k),
            });
        }
        lambda[li] = row.lambda;
        let ui = row.l * users + row.k;
        if pilot[ui] == usize::MAX {
            pilot[ui] = row.pilot;
            power[ui] = row.power;
        } else if pilot[ui] != row.pilot || power[ui] != row.power {
            return Err(ScenarioError::Csv {
                line: 1,
                reason: format!("inconsistent pilot/power for user ({},{})", row.l, row.k),
            });
        }
    }
    Scenario::from_parts(cells, users, lambda, power, pilot)
        .map_err(|_| ScenarioError::Csv { line: 1, reason: "incomplete table".into() })
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("geometry must have at least one cell and one sector with a positive side")]
    EmptyGeometry,
    #[error("exclusion radius must be smaller than half the cell side")]
    ExclusionRadiusTooLarge,
    #[error("could not place a user in cell {cell} sector {sector}")]
    UserDropFailed { cell: usize, sector: usize },
    #[error("transmit power must be positive")]
    NonPositivePower,
    #[error("shadow fading standard deviation must be non-negative")]
    NegativeShadowStd,
    #[error("scenario csv, line {line}: {reason}")]
    Csv { line: usize, reason: String },
    #[error("io error: {0}")]
    Io(#[from] io::Error),
}
