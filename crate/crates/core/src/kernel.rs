//! Lane-parallel Metropolis update engine for the nearest-neighbour Ising
//! model, plus a sequential double-precision reference kernel.
//!
//! A sweep is a list of schedule steps. Each step is one emulated clock
//! cycle: the global LFSR advances once and every lane in the step updates
//! one site of the active colour class using its own 12-bit draw.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{check_side, ModelKind, ModelParams, SpinLattice};
use crate::rng::LaneRngBank;

/// Scale of the fixed-point acceptance thresholds (12-bit words).
pub const FIXED_ONE: f64 = 4096.0;
/// Largest representable threshold.
pub const THRESHOLD_MAX: u16 = 4095;
/// Threshold value that accepts every 12-bit draw.
pub const ALWAYS: u16 = 4096;

/// `min(4095, round(4096 * e^{-beta dE}))`.
pub fn fixed_point_threshold(beta: f64, delta_e: f64) -> u16 {
    let v = (FIXED_ONE * (-beta * delta_e).exp()).round();
    if v >= THRESHOLD_MAX as f64 {
        THRESHOLD_MAX
    } else {
        v as u16
    }
}

pub(crate) fn check_temperature(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidTemperature(t));
    }
    Ok(())
}

/// Five 12-bit acceptance thresholds indexed by `k = (eps + 4) / 2`.
///
/// Entries for `eps <= 0` are never consulted (those moves always flip) and
/// are stored saturated at 4095.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoltzmannTable {
    entries: [u16; 5],
    temperature: f64,
    coupling: f64,
}

impl BoltzmannTable {
    /// Table for `J = 1`.
    pub fn new(temperature: f64) -> Result<Self> {
        Self::with_coupling(temperature, 1.0)
    }

    pub fn with_coupling(temperature: f64, coupling: f64) -> Result<Self> {
        check_temperature(temperature)?;
        if !(coupling > 0.0 && coupling.is_finite()) {
            return Err(Error::InvalidParameter(format!("coupling J must be positive, got {coupling}")));
        }
        let beta = 1.0 / temperature;
        let mut entries = [THRESHOLD_MAX; 5];
        for (k, e) in entries.iter_mut().enumerate().skip(3) {
            let eps = 2 * k as i32 - 4;
            *e = fixed_point_threshold(beta, 2.0 * coupling * eps as f64);
        }
        Ok(BoltzmannTable { entries, temperature, coupling })
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn entries(&self) -> [u16; 5] {
        self.entries
    }

    pub fn entry(&self, eps: i32) -> Result<u16> {
        Ok(self.entries[eps_index(eps)?])
    }

    /// Threshold the comparator uses for `eps`: [`ALWAYS`] when `eps <= 0`.
    fn acceptance(&self, eps: i32) -> u16 {
        if eps <= 0 {
            ALWAYS
        } else {
            self.entries[((eps + 4) / 2) as usize]
        }
    }

    /// `accept[spin_bit][n_up]` for a site whose spin bit is `spin_bit` and
    /// that has `n_up` up neighbours.
    fn acceptance_grid(&self) -> [[u16; 5]; 2] {
        let mut grid = [[0u16; 5]; 2];
        for (bit, row) in grid.iter_mut().enumerate() {
            let s0 = if bit == 1 { 1 } else { -1 };
            for (n_up, cell) in row.iter_mut().enumerate() {
                *cell = self.acceptance(s0 * (2 * n_up as i32 - 4));
            }
        }
        grid
    }
}

fn eps_index(eps: i32) -> Result<usize> {
    match eps {
        -4 | -2 | 0 | 2 | 4 => Ok(((eps + 4) / 2) as usize),
        _ => Err(Error::InvalidEpsilon(eps)),
    }
}

/// Table for a nearest-neighbour Ising parameter set.
pub fn build_boltzmann_table(params: &ModelParams) -> Result<BoltzmannTable> {
    if params.model != ModelKind::Ising {
        return Err(Error::ModelMismatch { expected: "ising", found: params.model.name() });
    }
    BoltzmannTable::with_coupling(params.temperature, params.j)
}

/// One spin circuit: flip when `eps <= 0` or when `r < table[eps]`.
pub fn update_spin(s0: i8, eps: i32, r: u16, table: &BoltzmannTable) -> Result<i8> {
    eps_index(eps)?;
    if s0 != 1 && s0 != -1 {
        return Err(Error::InvalidParameter(format!("spin must be +1 or -1, got {s0}")));
    }
    if r > THRESHOLD_MAX {
        return Err(Error::InvalidParameter(format!("draw {r} exceeds 12 bits")));
    }
    Ok(if r < table.acceptance(eps) { -s0 } else { s0 })
}

/// How sites are split into conflict-free classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Partition {
    /// Two classes, `(i + j) mod 2`.
    Checkerboard,
    /// Four classes, `2 (i mod 2) + (j mod 2)`.
    FourColor,
}

impl Partition {
    pub fn n_classes(self) -> usize {
        match self {
            Partition::Checkerboard => 2,
            Partition::FourColor => 4,
        }
    }

    pub fn class_of(self, row: usize, col: usize) -> usize {
        match self {
            Partition::Checkerboard => (row + col) % 2,
            Partition::FourColor => 2 * (row % 2) + col % 2,
        }
    }

    /// Lattice rows holding sites of `class`, ascending.
    pub fn class_rows(self, side: usize, class: usize) -> Vec<usize> {
        match self {
            Partition::Checkerboard => (0..side).collect(),
            Partition::FourColor => (class >> 1..side).step_by(2).collect(),
        }
    }

    /// Column of the first `class` site in `row`; the rest follow every
    /// second column.
    #[inline(always)]
    pub fn first_col(self, class: usize, row: usize) -> usize {
        match self {
            Partition::Checkerboard => (class + row) % 2,
            Partition::FourColor => class & 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Color {
    Black,
    White,
}

impl Color {
    pub fn class(self) -> usize {
        match self {
            Color::Black => 0,
            Color::White => 1,
        }
    }
}

/// One emulated clock cycle: a block of rows of one colour class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub class: usize,
    pub rows: Vec<usize>,
}

impl Step {
    /// Sites updated by this step, in lane order.
    pub fn sites(&self, partition: Partition, side: usize) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.rows.len() * side / 2);
        for &i in &self.rows {
            let j0 = partition.first_col(self.class, i);
            out.extend((0..side / 2).map(|m| (i, j0 + 2 * m)));
        }
        out
    }
}

/// Full sweep order: for each class, its rows in blocks of `rows_per_step`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowBlockSchedule {
    side: usize,
    lane_budget: usize,
    partition: Partition,
    rows_per_step: usize,
    steps: Vec<Step>,
}

/// Checkerboard schedule: `rows_per_step = floor(lanes / (L / 2))`, capped at `L`.
pub fn row_block_schedule(side: usize, lane_budget: usize) -> Result<RowBlockSchedule> {
    RowBlockSchedule::new(side, lane_budget, Partition::Checkerboard)
}

impl RowBlockSchedule {
    pub fn new(side: usize, lane_budget: usize, partition: Partition) -> Result<Self> {
        check_side(side)?;
        let per_row = side / 2;
        if lane_budget < per_row {
            return Err(Error::Capacity { lanes: lane_budget, per_row });
        }
        let class_rows = side * 2 / partition.n_classes();
        let rows_per_step = (lane_budget / per_row).min(class_rows);
        let mut steps = Vec::new();
        for class in 0..partition.n_classes() {
            for block in partition.class_rows(side, class).chunks(rows_per_step) {
                steps.push(Step { class, rows: block.to_vec() });
            }
        }
        Ok(RowBlockSchedule { side, lane_budget, partition, rows_per_step, steps })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn lane_budget(&self) -> usize {
        self.lane_budget
    }

    pub fn partition(&self) -> Partition {
        self.partition
    }

    pub fn rows_per_step(&self) -> usize {
        self.rows_per_step
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn steps_for_class(&self, class: usize) -> impl Iterator<Item = &Step> {
        self.steps.iter().filter(move |s| s.class == class)
    }

    /// Lanes touched by the widest step.
    pub fn lanes_used(&self) -> usize {
        self.rows_per_step * self.side / 2
    }

    pub(crate) fn check_against(&self, side: usize, bank: &LaneRngBank) -> Result<()> {
        if self.side != side {
            return Err(Error::Configuration(format!(
                "schedule built for L={} used on L={side}",
                self.side
            )));
        }
        if bank.n_lanes() < self.lanes_used() {
            return Err(Error::Configuration(format!(
                "schedule needs {} lanes but the bank has {}",
                self.lanes_used(),
                bank.n_lanes()
            )));
        }
        Ok(())
    }
}

/// Up-neighbour count of 64 sites as three bit-planes.
#[inline(always)]
fn count_planes(a: u64, b: u64, c: u64, d: u64) -> (u64, u64, u64) {
    let (s1, c1) = (a ^ b, a & b);
    let (s2, c2) = (c ^ d, c & d);
    let carry = s1 & s2;
    (s1 ^ s2, c1 ^ c2 ^ carry, (c1 & c2) | ((c1 ^ c2) & carry))
}

/// Threshold table indexed by `spin_bit | n_up << 1`.
fn flat_thresholds(grid: &[[u16; 5]; 2]) -> [u16; 16] {
    let mut flat = [0u16; 16];
    for (bit, row) in grid.iter().enumerate() {
        for (n_up, &t) in row.iter().enumerate() {
            flat[bit | n_up << 1] = t;
        }
    }
    flat
}

/// One clock cycle of the nearest-neighbour kernel.
///
/// Works a word (64 sites) at a time: the neighbour counts of a whole word
/// come from bitwise adders, then each site of the active class takes one
/// draw from its lane. Same-class sites are never neighbours, so flips are
/// applied once per word.
fn run_step_nn(lat: &mut SpinLattice, bank: &mut LaneRngBank, thr: &[u16; 16], step: &Step) {
    bank.cycle_advance();
    let slice = bank.global_slice();
    let side = lat.side();
    let half = side / 2;
    let wpr = lat.words_per_row();
    let tail = side - 64 * (wpr - 1);
    let last_bit = (side - 1) & 63;
    let tail_mask = if tail == 64 { !0 } else { (1u64 << tail) - 1 };
    let words = lat.words_mut();
    for (b, &i) in step.rows.iter().enumerate() {
        let lanes = bank.lanes_mut(b * half, half);
        let mut lane = 0;
        let j0 = (step.class + i) & 1;
        let base = i * wpr;
        let ub = if i == 0 { side - 1 } else { i - 1 } * wpr;
        let db = if i + 1 == side { 0 } else { i + 1 } * wpr;
        let first = words[base];
        let last = words[base + wpr - 1];
        for k in 0..wpr {
            let w = words[base + k];
            let prev = if k == 0 { (last >> last_bit) & 1 } else { words[base + k - 1] >> 63 };
            let mut west = (w << 1) | prev;
            let mut east = w >> 1;
            if k + 1 < wpr {
                east |= words[base + k + 1] << 63;
            } else {
                east |= (first & 1) << last_bit;
                west &= tail_mask;
            }
            let (b0, b1, b2) = count_planes(words[ub + k], words[db + k], west, east);
            let cols = if k + 1 < wpr { 64 } else { tail };
            let mut flips = 0u64;
            let mut pos = j0;
            while pos < cols {
                let idx = ((w >> pos) & 1) | ((b0 >> pos) & 1) << 1 | ((b1 >> pos) & 1) << 2 | ((b2 >> pos) & 1) << 3;
                let local = &mut lanes[lane];
                *local = crate::rng::word12(*local);
                let r = slice ^ *local;
                flips |= ((r < thr[idx as usize]) as u64) << pos;
                lane += 1;
                pos += 2;
            }
            words[base + k] = w ^ flips;
        }
    }
}

fn check_checkerboard(schedule: &RowBlockSchedule) -> Result<()> {
    if schedule.partition != Partition::Checkerboard {
        return Err(Error::Configuration("nearest-neighbour sweeps need a checkerboard schedule".into()));
    }
    Ok(())
}

/// Updates every site of `color` once. Returns the number of trials.
pub fn half_sweep(
    lat: &mut SpinLattice,
    color: Color,
    bank: &mut LaneRngBank,
    table: &BoltzmannTable,
    schedule: &RowBlockSchedule,
) -> Result<u64> {
    check_checkerboard(schedule)?;
    schedule.check_against(lat.side(), bank)?;
    let thr = flat_thresholds(&table.acceptance_grid());
    let mut trials = 0u64;
    for step in schedule.steps_for_class(color.class()) {
        run_step_nn(lat, bank, &thr, step);
        trials += (step.rows.len() * lat.side() / 2) as u64;
    }
    Ok(trials)
}

/// One Monte Carlo step: black half-sweep then white half-sweep.
pub fn mcs(
    lat: &mut SpinLattice,
    bank: &mut LaneRngBank,
    table: &BoltzmannTable,
    schedule: &RowBlockSchedule,
) -> Result<u64> {
    Ok(half_sweep(lat, Color::Black, bank, table, schedule)?
        + half_sweep(lat, Color::White, bank, table, schedule)?)
}

/// Runs `n` Monte Carlo steps with a single validation up front.
pub fn run_mcs(
    lat: &mut SpinLattice,
    bank: &mut LaneRngBank,
    table: &BoltzmannTable,
    schedule: &RowBlockSchedule,
    n: usize,
) -> Result<u64> {
    check_checkerboard(schedule)?;
    schedule.check_against(lat.side(), bank)?;
    let thr = flat_thresholds(&table.acceptance_grid());
    for _ in 0..n {
        for step in schedule.steps() {
            run_step_nn(lat, bank, &thr, step);
        }
    }
    Ok((n * lat.n_sites()) as u64)
}

/// `N` single-site Metropolis trials at uniformly random sites with
/// double-precision acceptance `e^{-dE/T}` (`J = 1`).
pub fn sequential_mcs_reference<R: Rng + ?Sized>(
    lat: &mut SpinLattice,
    rng: &mut R,
    temperature: f64,
) -> Result<u64> {
    check_temperature(temperature)?;
    let beta = 1.0 / temperature;
    let side = lat.side();
    let n = lat.n_sites();
    for _ in 0..n {
        let i = rng.random_range(0..side);
        let j = rng.random_range(0..side);
        let s0 = lat.spin(i, j) as i32;
        let delta_e = 2 * s0 * (2 * lat.nn_up_count(i, j) as i32 - 4);
        if delta_e <= 0 || rng.random::<f64>() < (-beta * delta_e as f64).exp() {
            lat.flip(i, j);
        }
    }
    Ok(n as u64)
}
