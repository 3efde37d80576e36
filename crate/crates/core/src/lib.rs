//! Software emulation of a lane-parallel FPGA Ising machine.
//!
//! A bit-packed lattice is swept in checkerboard (or four-colour) order by a
//! bank of 12-bit LFSR lanes that share a 32-bit global register, with
//! Metropolis acceptance read from a fixed-point Boltzmann table.

pub mod analysis;
pub mod bench;
pub mod cli;
pub mod error;
pub mod kernel;
pub mod lattice;
pub mod models;
pub mod observables;
pub mod rng;

pub use error::{Error, Result};
pub use kernel::{
    build_boltzmann_table, half_sweep, mcs, row_block_schedule, run_mcs, sequential_mcs_reference, update_spin,
    BoltzmannTable, Color, Partition, RowBlockSchedule,
};
pub use lattice::{checkerboard_partition, four_color_partition, Init, ModelKind, ModelParams, SpinLattice};
pub use observables::{run_temperature_point, susceptibility, temperature_sweep, PointStats, Protocol, SampleSeries};
pub use rng::{seed_lanes, LaneRngBank};
