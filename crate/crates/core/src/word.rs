use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A binary word of at most [`BitWord::MAX_LEN`] symbols packed into a `u64`.
///
/// The oldest symbol sits in the most significant used bit, so for words of
/// equal length the numeric order of `bits` is the lexicographic order. The
/// newest symbol (time `-1` when the word is read as `w_{-n}^{-1}`) is bit 0.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct BitWord {
    len: u8,
    bits: u64,
}

fn mask(len: usize) -> u64 {
    if len >= 64 {
        u64::MAX
    } else {
        (1u64 << len) - 1
    }
}

impl BitWord {
    pub const MAX_LEN: usize = 63;

    pub const EMPTY: BitWord = BitWord { len: 0, bits: 0 };

    /// Builds a word from its packed representation. Bits above `len` are
    /// rejected.
    pub fn new(bits: u64, len: usize) -> Result<Self> {
        if len > Self::MAX_LEN {
            return Err(Error::InvalidWord(format!(
                "length {len} exceeds {}",
                Self::MAX_LEN
            )));
        }
        if bits & !mask(len) != 0 {
            return Err(Error::InvalidWord(format!(
                "bits {bits:#x} do not fit in {len} symbols"
            )));
        }
        Ok(Self {
            len: len as u8,
            bits,
        })
    }

    /// Unchecked constructor for internal hot paths.
    #[inline]
    pub(crate) fn raw(bits: u64, len: usize) -> Self {
        debug_assert!(len <= Self::MAX_LEN && bits & !mask(len) == 0);
        Self {
            len: len as u8,
            bits,
        }
    }

    pub fn from_symbols(symbols: &[u8]) -> Result<Self> {
        if symbols.len() > Self::MAX_LEN {
            return Err(Error::InvalidWord(format!(
                "length {} exceeds {}",
                symbols.len(),
                Self::MAX_LEN
            )));
        }
        let mut bits = 0u64;
        for &s in symbols {
            if s > 1 {
                return Err(Error::InvalidWord(format!("symbol {s} is not binary")));
            }
            bits = (bits << 1) | s as u64;
        }
        Ok(Self::raw(bits, symbols.len()))
    }

    /// The run `b^len`.
    pub fn repeat(b: u8, len: usize) -> Self {
        assert!(len <= Self::MAX_LEN);
        Self::raw(if b == 0 { 0 } else { mask(len) }, len)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len as usize
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn bits(&self) -> u64 {
        self.bits
    }

    /// Symbol at position `i`, counted from the oldest symbol (0-based).
    #[inline]
    pub fn at(&self, i: usize) -> u8 {
        debug_assert!(i < self.len());
        ((self.bits >> (self.len() - 1 - i)) & 1) as u8
    }

    /// Symbol `j` places from the right, 1-based (`j = 1` is the newest).
    #[inline]
    pub fn from_right(&self, j: usize) -> u8 {
        debug_assert!(j >= 1 && j <= self.len());
        ((self.bits >> (j - 1)) & 1) as u8
    }

    /// Flips the symbol `j` places from the right (1-based).
    #[inline]
    pub fn flip_from_right(&self, j: usize) -> Self {
        debug_assert!(j >= 1 && j <= self.len());
        Self::raw(self.bits ^ (1u64 << (j - 1)), self.len())
    }

    /// Flips the symbol at position `i` from the oldest (0-based).
    #[inline]
    pub fn flip_at(&self, i: usize) -> Self {
        self.flip_from_right(self.len() - i)
    }

    /// Appends a newest symbol.
    #[inline]
    pub fn push(&self, b: u8) -> Self {
        debug_assert!(self.len() < Self::MAX_LEN && b <= 1);
        Self::raw((self.bits << 1) | b as u64, self.len() + 1)
    }

    /// Prepends an oldest symbol.
    #[inline]
    pub fn push_front(&self, b: u8) -> Self {
        debug_assert!(self.len() < Self::MAX_LEN && b <= 1);
        Self::raw(self.bits | ((b as u64) << self.len()), self.len() + 1)
    }

    pub fn concat(&self, other: &BitWord) -> Result<Self> {
        let len = self.len() + other.len();
        if len > Self::MAX_LEN {
            return Err(Error::InvalidWord(format!(
                "length {len} exceeds {}",
                Self::MAX_LEN
            )));
        }
        Ok(Self::raw((self.bits << other.len()) | other.bits, len))
    }

    /// The oldest `n` symbols.
    #[inline]
    pub fn prefix(&self, n: usize) -> Self {
        debug_assert!(n <= self.len());
        Self::raw(
            if n == 0 {
                0
            } else {
                self.bits >> (self.len() - n)
            },
            n,
        )
    }

    /// The newest `n` symbols.
    #[inline]
    pub fn suffix(&self, n: usize) -> Self {
        debug_assert!(n <= self.len());
        Self::raw(self.bits & mask(n), n)
    }

    /// The factor of length `n` starting at position `start` (0-based from the oldest).
    #[inline]
    pub fn slice(&self, start: usize, n: usize) -> Self {
        debug_assert!(start + n <= self.len());
        Self::raw((self.bits >> (self.len() - start - n)) & mask(n), n)
    }

    /// Shifts in `b` as the newest symbol and drops the oldest one, keeping the length.
    #[inline]
    pub fn shift_in(&self, b: u8) -> Self {
        let n = self.len();
        Self::raw(((self.bits << 1) | b as u64) & mask(n), n)
    }

    pub fn complement(&self) -> Self {
        Self::raw(!self.bits & mask(self.len()), self.len())
    }

    pub fn contains_factor(&self, f: &BitWord) -> bool {
        if f.len() > self.len() {
            return false;
        }
        (0..=self.len() - f.len()).any(|s| self.slice(s, f.len()) == *f)
    }

    pub fn symbols(&self) -> impl Iterator<Item = u8> + '_ {
        (0..self.len()).map(move |i| self.at(i))
    }

    /// All `2^len` words of a given length in lexicographic order.
    pub fn all(len: usize) -> impl Iterator<Item = BitWord> {
        assert!(len <= 30, "refusing to enumerate 2^{len} words");
        (0..(1u64 << len)).map(move |b| BitWord::raw(b, len))
    }
}

impl fmt::Display for BitWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in self.symbols() {
            f.write_str(if s == 1 { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitWord(\"{self}\")")
    }
}

impl FromStr for BitWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let symbols: Vec<u8> = s
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                _ => Err(Error::InvalidWord(format!(
                    "unexpected character {c:?} in {s:?}"
                ))),
            })
            .collect::<Result<_>>()?;
        Self::from_symbols(&symbols)
    }
}

impl Serialize for BitWord {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitWord {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Shorthand used heavily in tests: panics on malformed input.
pub fn w(s: &str) -> BitWord {
    s.parse().expect("malformed word literal")
}
