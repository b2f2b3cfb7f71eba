//! Bit-channel index arithmetic.
//!
//! Channels are numbered `1..=N` with `N = 2^n`. The binary expansion of a
//! channel is the expansion of `i - 1`, written most significant bit first as
//! `(b_n, ..., b_1)`. Position 1 is the least significant bit.

use std::fmt;

use thiserror::Error;

/// Largest supported number of polarization levels.
pub const MAX_LEVELS: u32 = 30;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IndexError {
    #[error("number of levels {0} outside 1..={MAX_LEVELS}")]
    Levels(u32),
    #[error("channel index {index} outside 1..={max}")]
    OutOfRange { index: u32, max: u32 },
    #[error("invalid split: upper {upper} + lower {lower} levels")]
    Split { upper: u32, lower: u32 },
}

fn check_levels(n: u32) -> Result<(), IndexError> {
    if n == 0 || n > MAX_LEVELS {
        return Err(IndexError::Levels(n));
    }
    Ok(())
}

fn check_index(i: u32, bits: u32) -> Result<(), IndexError> {
    let max = 1u32 << bits;
    if i == 0 || i > max {
        return Err(IndexError::OutOfRange { index: i, max });
    }
    Ok(())
}

/// A 1-based bit-channel index together with its expansion width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitIndex {
    index: u32,
    levels: u32,
}

impl BitIndex {
    pub fn new(index: u32, levels: u32) -> Result<Self, IndexError> {
        check_levels(levels)?;
        check_index(index, levels)?;
        Ok(Self { index, levels })
    }

    /// Builds an index from the zero-based value `i - 1`.
    pub(crate) fn from_raw(raw: u32, levels: u32) -> Self {
        debug_assert!((1..=MAX_LEVELS).contains(&levels) && raw < (1u32 << levels));
        Self {
            index: raw + 1,
            levels,
        }
    }

    /// The 1-based channel index `i`.
    pub fn get(self) -> u32 {
        self.index
    }

    pub fn levels(self) -> u32 {
        self.levels
    }

    /// The value `i - 1` whose binary expansion labels the channel.
    pub fn raw(self) -> u32 {
        self.index - 1
    }

    /// Bit at `position` (1 = least significant).
    pub fn bit(self, position: u32) -> u8 {
        debug_assert!(position >= 1 && position <= self.levels);
        ((self.raw() >> (position - 1)) & 1) as u8
    }

    /// Expansion `(b_n, ..., b_1)`, most significant first.
    pub fn bits(self) -> Vec<u8> {
        (1..=self.levels).rev().map(|p| self.bit(p)).collect()
    }

    /// Hamming weight of `i - 1`.
    pub fn weight(self) -> u32 {
        self.raw().count_ones()
    }

    /// Index whose expansion is the bitwise complement of this one.
    pub fn complement(self) -> Self {
        let mask = (1u32 << self.levels) - 1;
        Self::from_raw(!self.raw() & mask, self.levels)
    }
}

impl fmt::Display for BitIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (", self.index)?;
        for b in self.bits() {
            write!(f, "{b}")?;
        }
        write!(f, ")_b")
    }
}

/// Binary expansion of `i - 1` with exactly `n` digits, most significant first.
pub fn to_bits(i: u32, n: u32) -> Result<Vec<u8>, IndexError> {
    Ok(BitIndex::new(i, n)?.bits())
}

/// Splits channel `i` into the channel labelled by the top `upper` bits and
/// the channel labelled by the bottom `lower` bits. Both results are 1-based.
pub fn split(i: u32, upper: u32, lower: u32) -> Result<(u32, u32), IndexError> {
    if upper == 0 || upper + lower > MAX_LEVELS {
        return Err(IndexError::Split { upper, lower });
    }
    check_index(i, upper + lower)?;
    let raw = i - 1;
    let low_mask = (1u32 << lower) - 1;
    Ok(((raw >> lower) + 1, (raw & low_mask) + 1))
}

/// Inverse of [`split`]: `i = (i_u - 1) * 2^lower + i_l`.
pub fn join(upper_index: u32, lower_index: u32, lower: u32) -> Result<u32, IndexError> {
    if lower >= MAX_LEVELS {
        return Err(IndexError::Split { upper: 0, lower });
    }
    check_index(lower_index, lower)?;
    if upper_index == 0 || upper_index > (1u32 << (MAX_LEVELS - lower)) {
        return Err(IndexError::OutOfRange {
            index: upper_index,
            max: 1u32 << (MAX_LEVELS - lower),
        });
    }
    Ok(((upper_index - 1) << lower) + lower_index)
}
