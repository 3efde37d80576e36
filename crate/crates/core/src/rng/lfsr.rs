use crate::error::{Error, Result};

/// 32-bit Fibonacci LFSR, polynomial `x^32 + x^22 + x^2 + x + 1`.
///
/// The register shifts left and the feedback bit `b31 ^ b21 ^ b1 ^ b0`
/// enters at bit 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Lfsr32(u32);

/// 12-bit Fibonacci LFSR, polynomial `x^12 + x^11 + x^10 + x^4 + 1`.
///
/// Feedback `b11 ^ b10 ^ b9 ^ b3` enters at bit 0; the state lives in the
/// low 12 bits of a `u16`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Lfsr12(u16);

#[inline(always)]
pub(crate) fn step32(s: u32) -> u32 {
    let fb = ((s >> 31) ^ (s >> 21) ^ (s >> 1) ^ s) & 1;
    (s << 1) | fb
}

#[inline(always)]
pub(crate) fn step12(s: u16) -> u16 {
    let fb = ((s >> 11) ^ (s >> 10) ^ (s >> 9) ^ (s >> 3)) & 1;
    ((s << 1) | fb) & 0x0FFF
}

/// Register steps per draw word: both generators advance by a whole 12-bit
/// word, so consecutive words from one register share no bits.
pub const WORD_STEPS: usize = 12;

#[inline(always)]
pub(crate) fn word32(mut s: u32) -> u32 {
    for _ in 0..WORD_STEPS {
        s = step32(s);
    }
    s
}

const fn build_word12() -> [u16; 4096] {
    let mut table = [0u16; 4096];
    let mut s = 0;
    while s < 4096 {
        let mut x = s as u16;
        let mut k = 0;
        while k < WORD_STEPS {
            let fb = ((x >> 11) ^ (x >> 10) ^ (x >> 9) ^ (x >> 3)) & 1;
            x = ((x << 1) | fb) & 0x0FFF;
            k += 1;
        }
        table[s] = x;
        s += 1;
    }
    table
}

/// `WORD12[s]` is `s` advanced by [`WORD_STEPS`] steps.
pub(crate) static WORD12: [u16; 4096] = build_word12();

#[inline(always)]
pub(crate) fn word12(s: u16) -> u16 {
    WORD12[s as usize & 0x0FFF]
}

pub fn lfsr32_next(state: u32) -> Result<u32> {
    Ok(Lfsr32::new(state)?.next().0)
}

pub fn lfsr12_next(state: u16) -> Result<u16> {
    Ok(Lfsr12::new(state)?.next().0)
}

impl Lfsr32 {
    pub fn new(state: u32) -> Result<Self> {
        if state == 0 {
            return Err(Error::InvalidLfsrState { state, bits: 32 });
        }
        Ok(Lfsr32(state))
    }

    pub fn state(self) -> u32 {
        self.0
    }

    #[must_use]
    pub fn next(self) -> Self {
        Lfsr32(step32(self.0))
    }

    #[inline(always)]
    pub fn advance(&mut self) {
        self.0 = step32(self.0);
    }

    /// Advances [`WORD_STEPS`] steps.
    #[inline(always)]
    pub fn advance_word(&mut self) {
        self.0 = word32(self.0);
    }
}

impl Lfsr12 {
    pub fn new(state: u16) -> Result<Self> {
        if state == 0 || state > 0x0FFF {
            return Err(Error::InvalidLfsrState { state: state as u32, bits: 12 });
        }
        Ok(Lfsr12(state))
    }

    pub fn state(self) -> u16 {
        self.0
    }

    #[must_use]
    pub fn next(self) -> Self {
        Lfsr12(step12(self.0))
    }

    #[inline(always)]
    pub fn advance(&mut self) {
        self.0 = step12(self.0);
    }

    /// Advances [`WORD_STEPS`] steps.
    #[inline(always)]
    pub fn advance_word(&mut self) {
        self.0 = word12(self.0);
    }
}
