//! Local update rules behind one contract: propose a candidate state, then
//! accept it when a 12-bit draw falls below a precomputed threshold.
//!
//! The generic engine here drives any [`LocalModel`] through a
//! [`RowBlockSchedule`] with the same cycle/lane discipline as the
//! specialised nearest-neighbour kernel.

pub mod ising;
pub mod j1j2;
pub mod potts;

use crate::error::Result;
use crate::kernel::{Partition, RowBlockSchedule, Step};
use crate::lattice::SpinLattice;
use crate::rng::LaneRngBank;

pub use ising::{epsilon_nn, NnIsing};
pub use j1j2::{epsilon_j1j2, j1j2_boltzmann_table, j1j2_mcs, total_energy_j1j2, J1J2, J1J2Table};
pub use potts::{potts_delta_e, potts_mcs, potts_propose, Potts, PottsInit, PottsLattice, PottsTable};

/// Anything with a side length that a schedule can sweep.
pub trait SiteGrid {
    fn side(&self) -> usize;
}

impl SiteGrid for SpinLattice {
    fn side(&self) -> usize {
        SpinLattice::side(self)
    }
}

pub trait LocalModel {
    type Lattice: SiteGrid;
    type State: Copy + PartialEq;

    /// Whether a trial spends a draw choosing its candidate before the
    /// acceptance draw.
    const PROPOSAL_DRAW: bool;

    fn state(&self, lat: &Self::Lattice, row: usize, col: usize) -> Self::State;

    fn propose(&self, current: Self::State, draw: u16) -> Self::State;

    /// Fixed-point threshold for moving `(row, col)` to `proposed`;
    /// [`ALWAYS`](crate::kernel::ALWAYS) when the move does not raise the energy.
    fn threshold(
        &self,
        lat: &Self::Lattice,
        row: usize,
        col: usize,
        current: Self::State,
        proposed: Self::State,
    ) -> u16;

    fn set(&self, lat: &mut Self::Lattice, row: usize, col: usize, state: Self::State);
}

fn model_step<M: LocalModel>(
    model: &M,
    lat: &mut M::Lattice,
    bank: &mut LaneRngBank,
    step: &Step,
    partition: Partition,
) {
    bank.cycle_advance();
    let slice = bank.global_slice();
    let half = lat.side() / 2;
    for (b, &i) in step.rows.iter().enumerate() {
        let j0 = partition.first_col(step.class, i);
        for m in 0..half {
            let lane = b * half + m;
            let j = j0 + 2 * m;
            let current = model.state(lat, i, j);
            let draw = if M::PROPOSAL_DRAW { bank.draw12_with(lane, slice) } else { 0 };
            let proposed = model.propose(current, draw);
            let r = bank.draw12_with(lane, slice);
            if r < model.threshold(lat, i, j, current, proposed) {
                model.set(lat, i, j, proposed);
            }
        }
    }
}

/// One Monte Carlo step of `model` over every step of `schedule`.
pub fn model_mcs<M: LocalModel>(
    model: &M,
    lat: &mut M::Lattice,
    bank: &mut LaneRngBank,
    schedule: &RowBlockSchedule,
) -> Result<u64> {
    schedule.check_against(lat.side(), bank)?;
    for step in schedule.steps() {
        model_step(model, lat, bank, step, schedule.partition());
    }
    Ok((lat.side() * lat.side()) as u64)
}
