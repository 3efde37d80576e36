//! Binary J1/J2 model: ferromagnetic nearest-neighbour coupling `J1 > 0`
//! and antiferromagnetic diagonal coupling `J2 <= 0`. Sweeps use the
//! four-colour partition so no two sites in a step interact.

use super::{model_mcs, LocalModel};
use crate::error::{Error, Result};
use crate::kernel::{check_temperature, fixed_point_threshold, Partition, RowBlockSchedule, ALWAYS};
use crate::lattice::SpinLattice;
use crate::rng::LaneRngBank;

/// `J2 = 0` is accepted as the nearest-neighbour limit.
pub fn check_couplings(j1: f64, j2: f64) -> Result<()> {
    if !(j1 > 0.0 && j1.is_finite()) {
        return Err(Error::InvalidParameter(format!("J1 must be positive, got {j1}")));
    }
    if !(j2 <= 0.0 && j2.is_finite()) {
        return Err(Error::InvalidParameter(format!("J2 must be non-positive, got {j2}")));
    }
    Ok(())
}

fn check_sum(name: &str, sum: i32) -> Result<()> {
    if !matches!(sum, -4 | -2 | 0 | 2 | 4) {
        return Err(Error::InvalidParameter(format!("{name} {sum} out of range")));
    }
    Ok(())
}

/// `eps' = (J1 * nn_sum + J2 * nnn_sum) * S0`; the flip costs `2 eps'`.
pub fn epsilon_j1j2(s0: i8, nn_sum: i32, nnn_sum: i32, j1: f64, j2: f64) -> Result<f64> {
    check_couplings(j1, j2)?;
    check_sum("nearest-neighbour sum", nn_sum)?;
    check_sum("next-nearest-neighbour sum", nnn_sum)?;
    if s0 != 1 && s0 != -1 {
        return Err(Error::InvalidParameter(format!("spin must be +1 or -1, got {s0}")));
    }
    Ok((j1 * nn_sum as f64 + j2 * nnn_sum as f64) * s0 as f64)
}

/// `H = -J1 sum_<ij> S_i S_j - J2 sum_<<ij>> S_i S_j`.
pub fn total_energy_j1j2(lat: &SpinLattice, j1: f64, j2: f64) -> f64 {
    -j1 * lat.bond_sum_nn() as f64 - j2 * lat.bond_sum_nnn() as f64
}

/// Expanded threshold table over the 25 `(nn_sum, nnn_sum)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct J1J2Table {
    /// `grid[a][b]`: threshold for an up spin with `a` up nearest and `b`
    /// up diagonal neighbours. Down spins use the mirrored counts.
    grid: [[u16; 5]; 5],
    j1: f64,
    j2: f64,
    temperature: f64,
}

pub fn j1j2_boltzmann_table(temperature: f64, j1: f64, j2: f64) -> Result<J1J2Table> {
    check_temperature(temperature)?;
    check_couplings(j1, j2)?;
    let beta = 1.0 / temperature;
    let mut grid = [[0u16; 5]; 5];
    for (a, row) in grid.iter_mut().enumerate() {
        for (b, cell) in row.iter_mut().enumerate() {
            let eps = j1 * (2 * a as i32 - 4) as f64 + j2 * (2 * b as i32 - 4) as f64;
            *cell = if eps <= 0.0 { ALWAYS } else { fixed_point_threshold(beta, 2.0 * eps) };
        }
    }
    Ok(J1J2Table { grid, j1, j2, temperature })
}

impl J1J2Table {
    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    /// Distinct attainable `eps' > 0` with their thresholds, ascending in `eps'`.
    pub fn positive_entries(&self) -> Vec<(f64, u16)> {
        let mut out: Vec<(f64, u16)> = Vec::new();
        for a in 0..5 {
            for b in 0..5 {
                let eps = self.j1 * (2 * a as i32 - 4) as f64 + self.j2 * (2 * b as i32 - 4) as f64;
                if eps > 0.0 && !out.iter().any(|(e, _)| (e - eps).abs() < 1e-12) {
                    out.push((eps, self.grid[a][b]));
                }
            }
        }
        out.sort_by(|x, y| x.0.total_cmp(&y.0));
        out
    }

    #[inline(always)]
    fn threshold(&self, up: bool, nn_up: u32, nnn_up: u32) -> u16 {
        if up {
            self.grid[nn_up as usize][nnn_up as usize]
        } else {
            self.grid[4 - nn_up as usize][4 - nnn_up as usize]
        }
    }
}

#[derive(Debug, Clone)]
pub struct J1J2 {
    pub table: J1J2Table,
}

impl LocalModel for J1J2 {
    type Lattice = SpinLattice;
    type State = bool;
    const PROPOSAL_DRAW: bool = false;

    fn state(&self, lat: &SpinLattice, row: usize, col: usize) -> bool {
        lat.bit(row, col)
    }

    fn propose(&self, current: bool, _draw: u16) -> bool {
        !current
    }

    fn threshold(&self, lat: &SpinLattice, row: usize, col: usize, current: bool, _: bool) -> u16 {
        self.table.threshold(current, lat.nn_up_count(row, col), lat.nnn_up_count(row, col))
    }

    fn set(&self, lat: &mut SpinLattice, row: usize, col: usize, state: bool) {
        lat.put(row, col, state);
    }
}

/// One Monte Carlo step; `schedule` must use the four-colour partition.
pub fn j1j2_mcs(
    lat: &mut SpinLattice,
    bank: &mut LaneRngBank,
    table: &J1J2Table,
    schedule: &RowBlockSchedule,
) -> Result<u64> {
    if schedule.partition() != Partition::FourColor {
        return Err(Error::Configuration("J1/J2 sweeps need a four-colour schedule".into()));
    }
    model_mcs(&J1J2 { table: table.clone() }, lat, bank, schedule)
}
