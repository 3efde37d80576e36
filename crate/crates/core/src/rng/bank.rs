use super::lfsr::{word12, Lfsr32};
use crate::error::{Error, Result};

/// One shared 32-bit LFSR plus a 12-bit LFSR per update lane.
///
/// Every lane's draw is the XOR of its own freshly advanced 12-bit state with
/// the low 12 bits of the global register. The global register advances one
/// word per update cycle and is shared by all lanes in that cycle; each draw
/// advances the lane's register one word. A word is [`WORD_STEPS`] LFSR steps.
///
/// [`WORD_STEPS`]: super::WORD_STEPS
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LaneRngBank {
    global: Lfsr32,
    locals: Vec<u16>,
}

fn digest(seed: u64) -> u32 {
    // splitmix64 finaliser folded to 32 bits
    let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    match (z as u32) ^ ((z >> 32) as u32) {
        0 => 0x9E37_79B9,
        d => d,
    }
}

/// Seeds a bank deterministically from `master_seed`.
///
/// Local states are the low 12 bits of a copy of the global register taken
/// every 32 steps, skipping zeros and repeats.
pub fn seed_lanes(master_seed: u64, n_lanes: usize) -> Result<LaneRngBank> {
    if n_lanes == 0 {
        return Err(Error::InvalidParameter("a bank needs at least one lane".into()));
    }
    if n_lanes > 4095 {
        return Err(Error::TooManyLanes(n_lanes));
    }
    let global = Lfsr32::new(digest(master_seed))?;
    let mut walker = global;
    let mut used = [false; 4096];
    let mut locals = Vec::with_capacity(n_lanes);
    while locals.len() < n_lanes {
        for _ in 0..32 {
            walker.advance();
        }
        let candidate = (walker.state() & 0x0FFF) as u16;
        if candidate != 0 && !used[candidate as usize] {
            used[candidate as usize] = true;
            locals.push(candidate);
        }
    }
    Ok(LaneRngBank { global, locals })
}

impl LaneRngBank {
    pub fn n_lanes(&self) -> usize {
        self.locals.len()
    }

    pub fn global_state(&self) -> u32 {
        self.global.state()
    }

    pub fn local_states(&self) -> &[u16] {
        &self.locals
    }

    /// Low 12 bits of the global register, the slice every lane reads this cycle.
    #[inline(always)]
    pub fn global_slice(&self) -> u16 {
        (self.global.state() & 0x0FFF) as u16
    }

    /// Advances the global register one word. Local registers are untouched.
    #[inline(always)]
    pub fn cycle_advance(&mut self) {
        self.global.advance_word();
    }

    /// Advances `lane`'s local register one word and returns `global_slice ^ local`.
    pub fn draw12(&mut self, lane: usize) -> Result<u16> {
        if lane >= self.locals.len() {
            return Err(Error::LaneOutOfRange { lane, n_lanes: self.locals.len() });
        }
        Ok(self.draw12_with(lane, self.global_slice()))
    }

    /// Hot-path draw with the cycle's global slice already read.
    #[inline(always)]
    pub(crate) fn draw12_with(&mut self, lane: usize, slice: u16) -> u16 {
        let local = &mut self.locals[lane];
        *local = word12(*local);
        slice ^ *local
    }

    /// Local registers of `count` lanes starting at `first`, for the word kernel.
    #[inline(always)]
    pub(crate) fn lanes_mut(&mut self, first: usize, count: usize) -> &mut [u16] {
        &mut self.locals[first..first + count]
    }

    #[cfg(test)]
    pub(crate) fn from_parts(global: u32, locals: Vec<u16>) -> Self {
        LaneRngBank { global: Lfsr32::new(global).unwrap(), locals }
    }
}
