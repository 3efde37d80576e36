//! q-state Potts model, `H = -J sum_<ij> delta(S_i, S_j)` with states `1..=q`.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use super::{model_mcs, LocalModel, SiteGrid};
use crate::error::{Error, Result};
use crate::kernel::{check_temperature, fixed_point_threshold, Partition, RowBlockSchedule, ALWAYS};
use crate::lattice::{check_side, Site};
use crate::rng::LaneRngBank;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PottsInit {
    /// Every site in the given state.
    Uniform(u8),
    Random,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PottsLattice {
    side: usize,
    q: u8,
    states: Vec<u8>,
}

fn check_q(q: u32) -> Result<u8> {
    if !(2..=255).contains(&q) {
        return Err(Error::InvalidParameter(format!("Potts q must be in 2..=255, got {q}")));
    }
    Ok(q as u8)
}

impl PottsLattice {
    pub fn new(side: usize, q: u32, init: PottsInit, seed: u64) -> Result<Self> {
        check_side(side)?;
        let q = check_q(q)?;
        let states = match init {
            PottsInit::Uniform(s) => {
                if s == 0 || s > q {
                    return Err(Error::InvalidParameter(format!("state {s} outside 1..={q}")));
                }
                vec![s; side * side]
            }
            PottsInit::Random => {
                let mut rng = StdRng::seed_from_u64(seed);
                (0..side * side).map(|_| rng.random_range(1..=q)).collect()
            }
        };
        Ok(PottsLattice { side, q, states })
    }

    pub fn q(&self) -> u8 {
        self.q
    }

    pub fn n_sites(&self) -> usize {
        self.side * self.side
    }

    pub fn states(&self) -> &[u8] {
        &self.states
    }

    pub fn state_at(&self, row: usize, col: usize) -> Result<u8> {
        if row >= self.side || col >= self.side {
            return Err(Error::IndexOutOfRange { row, col, side: self.side });
        }
        Ok(self.get(row, col))
    }

    pub fn set_state(&mut self, row: usize, col: usize, state: u8) -> Result<()> {
        if row >= self.side || col >= self.side {
            return Err(Error::IndexOutOfRange { row, col, side: self.side });
        }
        if state == 0 || state > self.q {
            return Err(Error::InvalidParameter(format!("state {state} outside 1..={}", self.q)));
        }
        self.states[row * self.side + col] = state;
        Ok(())
    }

    #[inline(always)]
    fn get(&self, row: usize, col: usize) -> u8 {
        self.states[row * self.side + col]
    }

    /// The four nearest-neighbour states: up, down, left, right.
    pub fn neighbors(&self, row: usize, col: usize) -> [u8; 4] {
        let n = self.side;
        [
            self.get((row + n - 1) % n, col),
            self.get((row + 1) % n, col),
            self.get(row, (col + n - 1) % n),
            self.get(row, (col + 1) % n),
        ]
    }

    pub fn count_state(&self, state: u8) -> usize {
        self.states.iter().filter(|&&s| s == state).count()
    }

    /// Number of aligned bonds over the 2N torus bonds.
    pub fn aligned_bonds(&self) -> i64 {
        let n = self.side;
        let mut aligned = 0;
        for i in 0..n {
            for j in 0..n {
                let s = self.get(i, j);
                aligned += (s == self.get(i, (j + 1) % n)) as i64 + (s == self.get((i + 1) % n, j)) as i64;
            }
        }
        aligned
    }

    pub fn energy(&self, j: f64) -> f64 {
        -j * self.aligned_bonds() as f64
    }

    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        (0..self.side).flat_map(move |i| (0..self.side).map(move |j| (i, j)))
    }
}

impl SiteGrid for PottsLattice {
    fn side(&self) -> usize {
        self.side
    }
}

/// Picks uniformly among the `q - 1` states other than `s0` using the top
/// bits of a 12-bit draw.
pub fn potts_propose(s0: u8, q: u32, draw: u16) -> Result<u8> {
    let q = check_q(q)?;
    if s0 == 0 || s0 > q {
        return Err(Error::InvalidParameter(format!("state {s0} outside 1..={q}")));
    }
    if draw > 0x0FFF {
        return Err(Error::InvalidParameter(format!("draw {draw} exceeds 12 bits")));
    }
    Ok(propose_unchecked(s0, q, draw))
}

#[inline(always)]
fn propose_unchecked(s0: u8, q: u8, draw: u16) -> u8 {
    let idx = ((draw as u32 * (q as u32 - 1)) >> 12) as u8;
    let s = idx + 1;
    if s >= s0 {
        s + 1
    } else {
        s
    }
}

fn same_count(state: u8, nbrs: &[u8; 4]) -> i32 {
    nbrs.iter().filter(|&&n| n == state).count() as i32
}

/// `dE = J (n_same(S0) - n_same(S'))`.
pub fn potts_delta_e(s0: u8, proposed: u8, nbrs: [u8; 4], j: f64, q: u32) -> Result<f64> {
    let q = check_q(q)?;
    for s in [s0, proposed].iter().chain(nbrs.iter()) {
        if *s == 0 || *s > q {
            return Err(Error::InvalidParameter(format!("state {s} outside 1..={q}")));
        }
    }
    Ok(j * (same_count(s0, &nbrs) - same_count(proposed, &nbrs)) as f64)
}

/// Thresholds for `dE = J k`, `k = 1..=4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PottsTable {
    entries: [u16; 4],
    j: f64,
    temperature: f64,
}

impl PottsTable {
    pub fn new(temperature: f64, j: f64) -> Result<Self> {
        check_temperature(temperature)?;
        if !(j > 0.0 && j.is_finite()) {
            return Err(Error::InvalidParameter(format!("Potts J must be positive, got {j}")));
        }
        let beta = 1.0 / temperature;
        let mut entries = [0u16; 4];
        for (k, e) in entries.iter_mut().enumerate() {
            *e = fixed_point_threshold(beta, j * (k + 1) as f64);
        }
        Ok(PottsTable { entries, j, temperature })
    }

    pub fn entries(&self) -> [u16; 4] {
        self.entries
    }

    #[inline(always)]
    fn threshold(&self, k: i32) -> u16 {
        if k <= 0 {
            ALWAYS
        } else {
            self.entries[k as usize - 1]
        }
    }
}

#[derive(Debug, Clone)]
pub struct Potts {
    pub table: PottsTable,
    pub q: u8,
}

impl LocalModel for Potts {
    type Lattice = PottsLattice;
    type State = u8;
    const PROPOSAL_DRAW: bool = true;

    fn state(&self, lat: &PottsLattice, row: usize, col: usize) -> u8 {
        lat.get(row, col)
    }

    fn propose(&self, current: u8, draw: u16) -> u8 {
        propose_unchecked(current, self.q, draw)
    }

    fn threshold(&self, lat: &PottsLattice, row: usize, col: usize, current: u8, proposed: u8) -> u16 {
        let nbrs = lat.neighbors(row, col);
        self.table.threshold(same_count(current, &nbrs) - same_count(proposed, &nbrs))
    }

    fn set(&self, lat: &mut PottsLattice, row: usize, col: usize, state: u8) {
        lat.states[row * lat.side + col] = state;
    }
}

/// One Monte Carlo step over a checkerboard schedule.
pub fn potts_mcs(
    lat: &mut PottsLattice,
    bank: &mut LaneRngBank,
    table: &PottsTable,
    schedule: &RowBlockSchedule,
) -> Result<u64> {
    if schedule.partition() != Partition::Checkerboard {
        return Err(Error::Configuration("Potts sweeps need a checkerboard schedule".into()));
    }
    model_mcs(&Potts { table: *table, q: lat.q }, lat, bank, schedule)
}
