//! Fixed-width bit strings for task inputs and outputs.
//!
//! A [`Bits`] value is a string of up to 64 bits where position 0 is the
//! leftmost character of the textual form and corresponds to input node 1
//! of a network. Enumerating the input space in ascending binary order is
//! the same as counting `value` from 0 upward.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// A bit string of fixed length (at most 64 bits).
///
/// Internally the string is the binary numeral `value` with `len` digits,
/// most-significant digit first. `get(0)` is that leading digit.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bits {
    len: u8,
    value: u64,
}

impl Bits {
    /// Bit string of `len` digits spelling `value` in binary, MSB first.
    pub fn new(len: usize, value: u64) -> Self {
        assert!(len <= 64, "Bits supports at most 64 bits");
        if len < 64 {
            assert!(value < (1u64 << len), "value {value} out of range for {len} bits");
        }
        Bits {
            len: len as u8,
            value,
        }
    }

    pub fn zeros(len: usize) -> Self {
        Bits::new(len, 0)
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// The numeric value of the string read as a binary numeral.
    pub fn value(&self) -> u64 {
        self.value
    }

    /// Bit at position `pos` (0 = leftmost character = input node 1).
    pub fn get(&self, pos: usize) -> bool {
        assert!(pos < self.len());
        (self.value >> (self.len() - 1 - pos)) & 1 == 1
    }

    pub fn set(&mut self, pos: usize, bit: bool) {
        assert!(pos < self.len());
        let mask = 1u64 << (self.len() - 1 - pos);
        if bit {
            self.value |= mask;
        } else {
            self.value &= !mask;
        }
    }

    pub fn popcount(&self) -> u32 {
        self.value.count_ones()
    }

    /// Concatenation `self ‖ other`.
    pub fn concat(&self, other: &Bits) -> Bits {
        let len = self.len() + other.len();
        Bits::new(len, (self.value << other.len()) | other.value)
    }

    /// Splits into (first `at` positions, rest).
    pub fn split_at(&self, at: usize) -> (Bits, Bits) {
        assert!(at <= self.len());
        let right_len = self.len() - at;
        let right_mask = if right_len == 64 { u64::MAX } else { (1u64 << right_len) - 1 };
        (
            Bits::new(at, self.value >> right_len),
            Bits::new(right_len, self.value & right_mask),
        )
    }

    /// Elementwise AND of equal-length strings.
    pub fn and(&self, other: &Bits) -> Result<Bits> {
        if self.len != other.len {
            return Err(Error::LengthMismatch(self.len(), other.len()));
        }
        Ok(Bits::new(self.len(), self.value & other.value))
    }

    /// Iterates bits from position 0 to the end.
    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len()).map(move |p| self.get(p))
    }
}

/// Number of positions where `x` and `y` differ.
pub fn hamming_distance(x: &Bits, y: &Bits) -> Result<u32> {
    if x.len != y.len {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    Ok((x.value ^ y.value).count_ones())
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in 0..self.len() {
            write!(f, "{}", if self.get(p) { '1' } else { '0' })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Bits({self})")
    }
}

impl FromStr for Bits {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.len() > 64 {
            return Err(Error::TextFormat(format!("bit string too long: {}", s.len())));
        }
        let mut value = 0u64;
        for c in s.chars() {
            value <<= 1;
            match c {
                '0' => {}
                '1' => value |= 1,
                other => {
                    return Err(Error::TextFormat(format!("invalid bit character {other:?}")))
                }
            }
        }
        Ok(Bits::new(s.len(), value))
    }
}
