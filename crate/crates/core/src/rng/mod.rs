//! Combined global/local LFSR generator and a subset of the NIST SP 800-22
//! randomness tests.

mod bank;
mod lfsr;
pub mod nist;
mod stream;

pub use bank::{seed_lanes, LaneRngBank};
pub(crate) use lfsr::word12;
pub use lfsr::{lfsr12_next, lfsr32_next, Lfsr12, Lfsr32, WORD_STEPS};
pub use stream::{export_bitstream, generate_bits, read_bitstream, write_bitstream, BitStream, GeneratorKind};
