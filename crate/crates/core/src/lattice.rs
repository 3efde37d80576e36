//! Bit-packed square lattice with periodic boundaries.
//!
//! Spins are stored row-major, one bit per site: a set bit is spin `+1`,
//! a clear bit is spin `-1`. Each row occupies `ceil(L / 64)` words and the
//! unused high bits of a row's last word stay zero.

use std::fmt::Write as _;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Initial spin configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    AllUp,
    Random,
}

/// A lattice site as `(row, column)`.
pub type Site = (usize, usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpinLattice {
    side: usize,
    words_per_row: usize,
    words: Vec<u64>,
}

pub(crate) fn check_side(side: usize) -> Result<()> {
    if side < 4 || side % 2 != 0 {
        return Err(Error::InvalidDimension(side));
    }
    Ok(())
}

impl SpinLattice {
    pub fn new(side: usize, init: Init, seed: u64) -> Result<Self> {
        check_side(side)?;
        let words_per_row = side.div_ceil(64);
        let mut lat = SpinLattice {
            side,
            words_per_row,
            words: vec![0; side * words_per_row],
        };
        match init {
            Init::AllUp => {
                for i in 0..side {
                    for j in 0..side {
                        lat.put(i, j, true);
                    }
                }
            }
            Init::Random => {
                let mut rng = StdRng::seed_from_u64(seed);
                for i in 0..side {
                    for j in 0..side {
                        lat.put(i, j, rng.random::<bool>());
                    }
                }
            }
        }
        Ok(lat)
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn n_sites(&self) -> usize {
        self.side * self.side
    }

    pub fn words_per_row(&self) -> usize {
        self.words_per_row
    }

    /// Raw packed storage, row-major.
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub(crate) fn words_mut(&mut self) -> &mut [u64] {
        &mut self.words
    }

    fn check(&self, row: usize, col: usize) -> Result<()> {
        if row >= self.side || col >= self.side {
            return Err(Error::IndexOutOfRange { row, col, side: self.side });
        }
        Ok(())
    }

    pub fn spin_at(&self, row: usize, col: usize) -> Result<i8> {
        self.check(row, col)?;
        Ok(self.spin(row, col))
    }

    pub fn set_spin(&mut self, row: usize, col: usize, spin: i8) -> Result<()> {
        self.check(row, col)?;
        match spin {
            1 => self.put(row, col, true),
            -1 => self.put(row, col, false),
            other => {
                return Err(Error::InvalidParameter(format!("spin must be +1 or -1, got {other}")))
            }
        }
        Ok(())
    }

    #[inline(always)]
    pub(crate) fn bit(&self, row: usize, col: usize) -> bool {
        debug_assert!(row < self.side && col < self.side);
        (self.words[row * self.words_per_row + (col >> 6)] >> (col & 63)) & 1 == 1
    }

    #[inline(always)]
    pub(crate) fn spin(&self, row: usize, col: usize) -> i8 {
        if self.bit(row, col) {
            1
        } else {
            -1
        }
    }

    #[inline(always)]
    pub(crate) fn put(&mut self, row: usize, col: usize, up: bool) {
        let w = &mut self.words[row * self.words_per_row + (col >> 6)];
        let mask = 1u64 << (col & 63);
        if up {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    #[inline(always)]
    pub(crate) fn flip(&mut self, row: usize, col: usize) {
        self.words[row * self.words_per_row + (col >> 6)] ^= 1u64 << (col & 63);
    }

    pub fn flip_all(&mut self) {
        for i in 0..self.side {
            for j in 0..self.side {
                self.flip(i, j);
            }
        }
    }

    #[inline(always)]
    pub(crate) fn up(&self, row: usize) -> usize {
        if row == 0 {
            self.side - 1
        } else {
            row - 1
        }
    }

    #[inline(always)]
    pub(crate) fn down(&self, row: usize) -> usize {
        if row + 1 == self.side {
            0
        } else {
            row + 1
        }
    }

    /// Number of up spins among the four nearest neighbours.
    #[inline(always)]
    pub(crate) fn nn_up_count(&self, row: usize, col: usize) -> u32 {
        let (u, d, l, r) = (self.up(row), self.down(row), self.up(col), self.down(col));
        self.bit(u, col) as u32
            + self.bit(d, col) as u32
            + self.bit(row, l) as u32
            + self.bit(row, r) as u32
    }

    /// Number of up spins among the four diagonal (next-nearest) neighbours.
    #[inline(always)]
    pub(crate) fn nnn_up_count(&self, row: usize, col: usize) -> u32 {
        let (u, d, l, r) = (self.up(row), self.down(row), self.up(col), self.down(col));
        self.bit(u, l) as u32 + self.bit(u, r) as u32 + self.bit(d, l) as u32 + self.bit(d, r) as u32
    }

    /// Sum of the four nearest-neighbour spins with periodic wrap.
    pub fn neighbor_sum_nn(&self, row: usize, col: usize) -> Result<i32> {
        self.check(row, col)?;
        Ok(2 * self.nn_up_count(row, col) as i32 - 4)
    }

    /// Sum of the four diagonal neighbour spins with periodic wrap.
    pub fn neighbor_sum_nnn(&self, row: usize, col: usize) -> Result<i32> {
        self.check(row, col)?;
        Ok(2 * self.nnn_up_count(row, col) as i32 - 4)
    }

    pub fn count_up(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    /// `M = sum of S_i`, from population counts.
    pub fn total_magnetization(&self) -> i64 {
        2 * self.count_up() as i64 - self.n_sites() as i64
    }

    /// `sum over the 2N torus bonds of S_i S_j`, each bond counted once.
    pub fn bond_sum_nn(&self) -> i64 {
        let mut aligned = 0i64;
        for i in 0..self.side {
            let d = self.down(i);
            for j in 0..self.side {
                let r = self.down(j);
                let s = self.bit(i, j);
                aligned += (s == self.bit(i, r)) as i64 + (s == self.bit(d, j)) as i64;
            }
        }
        let bonds = 2 * self.n_sites() as i64;
        2 * aligned - bonds
    }

    /// Diagonal-bond counterpart of [`bond_sum_nn`](Self::bond_sum_nn): the 2N
    /// next-nearest pairs `(i, j)-(i+1, j+1)` and `(i, j)-(i+1, j-1)`.
    pub fn bond_sum_nnn(&self) -> i64 {
        let mut aligned = 0i64;
        for i in 0..self.side {
            let d = self.down(i);
            for j in 0..self.side {
                let s = self.bit(i, j);
                aligned += (s == self.bit(d, self.down(j))) as i64 + (s == self.bit(d, self.up(j))) as i64;
            }
        }
        2 * aligned - 2 * self.n_sites() as i64
    }

    /// `E = -J sum_<ij> S_i S_j` at zero field.
    pub fn total_energy_nn(&self, params: &ModelParams) -> Result<f64> {
        if params.model != ModelKind::Ising {
            return Err(Error::ModelMismatch { expected: "ising", found: params.model.name() });
        }
        Ok(-params.j * self.bond_sum_nn() as f64)
    }

    pub fn to_snapshot(&self) -> String {
        let mut out = String::with_capacity(self.n_sites() + self.side + 8);
        let _ = writeln!(out, "L={}", self.side);
        for i in 0..self.side {
            for j in 0..self.side {
                out.push(if self.bit(i, j) { '+' } else { '-' });
            }
            out.push('\n');
        }
        out
    }

    pub fn from_snapshot(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Configuration("empty snapshot".into()))?;
        let side: usize = header
            .trim()
            .strip_prefix("L=")
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Configuration(format!("bad snapshot header `{header}`")))?;
        let mut lat = SpinLattice::new(side, Init::AllUp, 0)?;
        for i in 0..side {
            let line = lines
                .next()
                .ok_or_else(|| Error::Configuration(format!("snapshot missing row {i}")))?;
            let bytes = line.trim_end().as_bytes();
            if bytes.len() != side {
                return Err(Error::Configuration(format!(
                    "snapshot row {i} has {} sites, expected {side}",
                    bytes.len()
                )));
            }
            for (j, b) in bytes.iter().enumerate() {
                match b {
                    b'+' => lat.put(i, j, true),
                    b'-' => lat.put(i, j, false),
                    _ => {
                        return Err(Error::Configuration(format!(
                            "invalid snapshot character `{}` at ({i}, {j})",
                            *b as char
                        )))
                    }
                }
            }
        }
        Ok(lat)
    }
}

/// Which Hamiltonian a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Ising,
    J1j2,
    Potts,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Ising => "ising",
            ModelKind::J1j2 => "j1j2",
            ModelKind::Potts => "potts",
        }
    }
}

/// Couplings and temperature. `k_B = 1` and the external field is always zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub model: ModelKind,
    pub j: f64,
    pub j1: f64,
    pub j2: f64,
    pub q: u32,
    pub temperature: f64,
}

impl ModelParams {
    pub fn ising(temperature: f64) -> Self {
        ModelParams { model: ModelKind::Ising, j: 1.0, j1: 1.0, j2: 0.0, q: 2, temperature }
    }

    pub fn j1j2(j1: f64, j2: f64, temperature: f64) -> Self {
        ModelParams { model: ModelKind::J1j2, j: 1.0, j1, j2, q: 2, temperature }
    }

    pub fn potts(q: u32, j: f64, temperature: f64) -> Self {
        ModelParams { model: ModelKind::Potts, j, j1: 1.0, j2: 0.0, q, temperature }
    }

    pub fn with_temperature(mut self, temperature: f64) -> Self {
        self.temperature = temperature;
        self
    }

    pub fn beta(&self) -> f64 {
        1.0 / self.temperature
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::InvalidTemperature(self.temperature));
        }
        match self.model {
            ModelKind::Ising | ModelKind::Potts if !(self.j > 0.0 && self.j.is_finite()) => {
                return Err(Error::InvalidParameter(format!("J must be positive and finite, got {}", self.j)))
            }
            ModelKind::J1j2 => crate::models::j1j2::check_couplings(self.j1, self.j2)?,
            _ => {}
        }
        if self.model == ModelKind::Potts && !(2..=255).contains(&self.q) {
            return Err(Error::InvalidParameter(format!("Potts q must be in 2..=255, got {}", self.q)));
        }
        Ok(())
    }
}

/// Two-colouring: site `(i, j)` is black (class 0) iff `i + j` is even.
pub fn checkerboard_partition(side: usize) -> Result<(Vec<Site>, Vec<Site>)> {
    check_side(side)?;
    let mut black = Vec::with_capacity(side * side / 2);
    let mut white = Vec::with_capacity(side * side / 2);
    for i in 0..side {
        for j in 0..side {
            if (i + j) % 2 == 0 {
                black.push((i, j));
            } else {
                white.push((i, j));
            }
        }
    }
    Ok((black, white))
}

/// Four-colouring with class `2 (i mod 2) + (j mod 2)`. Same-class sites are
/// neither nearest nor next-nearest neighbours.
pub fn four_color_partition(side: usize) -> Result<[Vec<Site>; 4]> {
    check_side(side)?;
    let mut classes: [Vec<Site>; 4] = Default::default();
    for i in 0..side {
        for j in 0..side {
            classes[2 * (i % 2) + (j % 2)].push((i, j));
        }
    }
    Ok(classes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_up(side: usize) -> SpinLattice {
        SpinLattice::new(side, Init::AllUp, 0).unwrap()
    }

    #[test]
    fn rejects_bad_sides() {
        for side in [0, 2, 3, 5, 15] {
            assert!(matches!(SpinLattice::new(side, Init::AllUp, 1), Err(Error::InvalidDimension(_))));
        }
        assert!(SpinLattice::new(6, Init::Random, 1).is_ok());
    }

    #[test]
    fn all_up_is_all_plus() {
        let lat = all_up(4);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(lat.spin_at(i, j).unwrap(), 1);
            }
        }
        assert_eq!(lat.total_magnetization(), 16);
    }

    #[test]
    fn random_is_seeded() {
        let a = SpinLattice::new(8, Init::Random, 42).unwrap();
        let b = SpinLattice::new(8, Init::Random, 42).unwrap();
        let c = SpinLattice::new(8, Init::Random, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn random_large_lattice_is_balanced() {
        let lat = SpinLattice::new(1024, Init::Random, 7).unwrap();
        let n = lat.n_sites() as f64;
        let mean = lat.total_magnetization() as f64 / n;
        assert!(mean.abs() < 4.0 / n.sqrt(), "mean spin {mean}");
    }

    #[test]
    fn padding_bits_stay_zero() {
        // 70 columns leave 58 padding bits in each row's second word.
        let mut lat = SpinLattice::new(70, Init::Random, 3).unwrap();
        lat.flip_all();
        let lat2 = SpinLattice::new(70, Init::AllUp, 0).unwrap();
        for l in [&lat, &lat2] {
            for i in 0..70 {
                assert_eq!(l.words()[i * 2 + 1] >> 6, 0);
            }
        }
        assert_eq!(lat2.count_up(), 4900);
    }

    #[test]
    fn read_after_write_and_bounds() {
        let mut lat = all_up(4);
        lat.set_spin(2, 3, -1).unwrap();
        assert_eq!(lat.spin_at(2, 3).unwrap(), -1);
        assert!(matches!(lat.spin_at(0, 4), Err(Error::IndexOutOfRange { .. })));
        assert!(lat.set_spin(4, 0, 1).is_err());
        assert!(lat.set_spin(0, 0, 0).is_err());
    }

    #[test]
    fn neighbor_sums() {
        let mut lat = all_up(4);
        assert_eq!(lat.neighbor_sum_nn(1, 1).unwrap(), 4);
        lat.set_spin(0, 0, -1).unwrap();
        assert_eq!(lat.neighbor_sum_nn(0, 1).unwrap(), 2);
        // (0,0)'s top neighbour is row 3 and left neighbour is column 3.
        assert_eq!(lat.neighbor_sum_nn(3, 0).unwrap(), 2);
        assert_eq!(lat.neighbor_sum_nn(0, 3).unwrap(), 2);
        assert_eq!(lat.neighbor_sum_nn(2, 2).unwrap(), 4);
        assert_eq!(lat.neighbor_sum_nnn(1, 1).unwrap(), 2);
        assert_eq!(lat.neighbor_sum_nnn(3, 3).unwrap(), 2);
    }

    #[test]
    fn energy_extremes() {
        let params = ModelParams::ising(1.0);
        let mut lat = all_up(4);
        assert_eq!(lat.total_energy_nn(&params).unwrap(), -32.0);
        for i in 0..4 {
            for j in 0..4 {
                if (i + j) % 2 == 1 {
                    lat.set_spin(i, j, -1).unwrap();
                }
            }
        }
        assert_eq!(lat.total_energy_nn(&params).unwrap(), 32.0);
        assert_eq!(lat.total_magnetization(), 0);
        assert!(matches!(
            lat.total_energy_nn(&ModelParams::potts(3, 1.0, 1.0)),
            Err(Error::ModelMismatch { .. })
        ));
    }

    #[test]
    fn checkerboard_classes() {
        let (black, white) = checkerboard_partition(4).unwrap();
        assert_eq!(black.len(), 8);
        assert_eq!(white.len(), 8);
        assert!(black.contains(&(0, 0)));
        for n in [(0, 1), (1, 0), (0, 3), (3, 0)] {
            assert!(white.contains(&n));
        }
        assert!(checkerboard_partition(5).is_err());
    }

    #[test]
    fn checkerboard_neighbors_are_opposite_colour() {
        for side in (4..=32).step_by(2) {
            let (black, _) = checkerboard_partition(side).unwrap();
            for &(i, j) in &black {
                for (a, b) in [
                    ((i + side - 1) % side, j),
                    ((i + 1) % side, j),
                    (i, (j + side - 1) % side),
                    (i, (j + 1) % side),
                ] {
                    assert_eq!((a + b) % 2, 1);
                }
            }
        }
    }

    #[test]
    fn checkerboard_matches_eight_by_eight_pattern() {
        let (black, _) = checkerboard_partition(8).unwrap();
        let mut grid = [[false; 8]; 8];
        for (i, j) in black {
            grid[i][j] = true;
        }
        for (i, row) in grid.iter().enumerate() {
            let expected: Vec<bool> = (0..8).map(|j| (i + j) % 2 == 0).collect();
            assert_eq!(row.to_vec(), expected);
            assert_eq!(row.iter().filter(|b| **b).count(), 4);
        }
    }

    #[test]
    fn four_colour_classes() {
        let classes = four_color_partition(4).unwrap();
        for c in &classes {
            assert_eq!(c.len(), 4);
        }
        let class_of = |s: Site| classes.iter().position(|c| c.contains(&s)).unwrap();
        assert_eq!(class_of((0, 0)), class_of((0, 2)));
        assert_ne!(class_of((0, 0)), class_of((1, 1)));
    }

    #[test]
    fn four_colour_exhaustive_scan() {
        let side = 8;
        let classes = four_color_partition(side).unwrap();
        let offsets: [(isize, isize); 8] = [(-1, 0), (1, 0), (0, -1), (0, 1), (-1, -1), (-1, 1), (1, -1), (1, 1)];
        for class in &classes {
            assert_eq!(class.len(), side * side / 4);
            for &a in class {
                for &b in class {
                    for (di, dj) in offsets {
                        let ni = (a.0 as isize + di).rem_euclid(side as isize) as usize;
                        let nj = (a.1 as isize + dj).rem_euclid(side as isize) as usize;
                        assert_ne!((ni, nj), b);
                    }
                }
            }
        }
    }

    #[test]
    fn snapshot_round_trip() {
        let lat = SpinLattice::new(6, Init::Random, 11).unwrap();
        let text = lat.to_snapshot();
        assert!(text.starts_with("L=6\n"));
        assert_eq!(SpinLattice::from_snapshot(&text).unwrap(), lat);
        assert!(SpinLattice::from_snapshot("L=4\n++++\n").is_err());
        assert!(SpinLattice::from_snapshot("L=4\n++x+\n++++\n++++\n++++\n").is_err());
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::ising(0.0).validate().is_err());
        assert!(ModelParams::ising(f64::NAN).validate().is_err());
        assert!(ModelParams::ising(2.0).validate().is_ok());
        assert!(ModelParams::j1j2(1.0, -0.5, 2.0).validate().is_ok());
        assert!(ModelParams::j1j2(1.0, 0.5, 2.0).validate().is_err());
        assert!(ModelParams::j1j2(-1.0, -0.5, 2.0).validate().is_err());
        assert!(ModelParams::potts(1, 1.0, 2.0).validate().is_err());
    }
}
