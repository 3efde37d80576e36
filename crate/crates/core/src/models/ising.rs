use super::LocalModel;
use crate::error::{Error, Result};
use crate::kernel::{BoltzmannTable, ALWAYS};
use crate::lattice::SpinLattice;

/// `eps = S0 * (S1 + S2 + S3 + S4)`; the flip costs `dE = 2 eps`.
pub fn epsilon_nn(s0: i8, nbr_sum: i32) -> Result<i32> {
    if s0 != 1 && s0 != -1 {
        return Err(Error::InvalidParameter(format!("spin must be +1 or -1, got {s0}")));
    }
    if !matches!(nbr_sum, -4 | -2 | 0 | 2 | 4) {
        return Err(Error::InvalidParameter(format!("neighbour sum {nbr_sum} out of range")));
    }
    Ok(s0 as i32 * nbr_sum)
}

/// Nearest-neighbour Ising rule for the generic engine. Proposals are flips.
#[derive(Debug, Clone)]
pub struct NnIsing {
    pub table: BoltzmannTable,
}

impl LocalModel for NnIsing {
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
        let s0 = if current { 1 } else { -1 };
        let eps = s0 * (2 * lat.nn_up_count(row, col) as i32 - 4);
        if eps <= 0 {
            ALWAYS
        } else {
            self.table.entries()[((eps + 4) / 2) as usize]
        }
    }

    fn set(&self, lat: &mut SpinLattice, row: usize, col: usize, state: bool) {
        lat.put(row, col, state);
    }
}
