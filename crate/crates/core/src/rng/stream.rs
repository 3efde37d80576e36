use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::bank::seed_lanes;
use crate::error::{Error, Result};

/// A sequence of bits, one `bool` per bit.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BitStream {
    bits: Vec<bool>,
}

impl BitStream {
    pub fn with_capacity(n: usize) -> Self {
        BitStream { bits: Vec::with_capacity(n) }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn push(&mut self, bit: bool) {
        self.bits.push(bit);
    }

    pub fn get(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        self.bits.iter().copied()
    }

    pub fn range(&self, start: usize, end: usize) -> impl Iterator<Item = bool> + '_ {
        self.bits[start..end].iter().copied()
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Packs 8 bits per byte, bit `k` of the stream in bit `k % 8` of byte `k / 8`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.bits.len().div_ceil(8)];
        for (k, &b) in self.bits.iter().enumerate() {
            if b {
                out[k / 8] |= 1 << (k % 8);
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], n_bits: usize) -> Result<Self> {
        if n_bits > bytes.len() * 8 {
            return Err(Error::InsufficientData { needed: n_bits, got: bytes.len() * 8 });
        }
        Ok((0..n_bits).map(|k| bytes[k / 8] >> (k % 8) & 1 == 1).collect())
    }
}

impl FromIterator<bool> for BitStream {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        BitStream { bits: iter.into_iter().collect() }
    }
}

/// Bit sources available for testing and export.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorKind {
    /// One lane of the combined generator: each bit is bit 0 of a fresh
    /// `draw12` after a `cycle_advance`.
    Combined,
    /// The bare 32-bit register: bit 0 after each step.
    Lfsr32,
}

impl GeneratorKind {
    pub fn name(self) -> &'static str {
        match self {
            GeneratorKind::Combined => "combined",
            GeneratorKind::Lfsr32 => "lfsr32",
        }
    }
}

pub fn generate_bits(kind: GeneratorKind, seed: u64, n_bits: usize) -> Result<BitStream> {
    let mut bank = seed_lanes(seed, 1)?;
    let mut bits = BitStream::with_capacity(n_bits);
    for _ in 0..n_bits {
        bank.cycle_advance();
        let bit = match kind {
            GeneratorKind::Combined => bank.draw12_with(0, bank.global_slice()) & 1,
            GeneratorKind::Lfsr32 => (bank.global_state() & 1) as u16,
        };
        bits.push(bit == 1);
    }
    Ok(bits)
}

pub fn write_bitstream(bits: &BitStream, path: &Path) -> Result<()> {
    fs::write(path, bits.to_bytes()).map_err(|e| Error::io(path, e))
}

pub fn read_bitstream(path: &Path, n_bits: usize) -> Result<BitStream> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    BitStream::from_bytes(&bytes, n_bits)
}

/// Writes `n_bits` from `kind` as raw packed bytes for external test suites.
pub fn export_bitstream(kind: GeneratorKind, seed: u64, n_bits: usize, path: &Path) -> Result<()> {
    if n_bits == 0 {
        return Err(Error::InvalidParameter("n_bits must be at least 1".into()));
    }
    write_bitstream(&generate_bits(kind, seed, n_bits)?, path)
}
