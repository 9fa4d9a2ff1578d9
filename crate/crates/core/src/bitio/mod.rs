//! Bitstrings, MSB-first bit streams and Elias-gamma codes.
//!
//! The canonical payload codec lives in [`codec`]; its bit lengths are the
//! complexity values reported everywhere else.

pub mod codec;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BitError {
    #[error("read of {wanted} bit(s) at offset {at} overruns a {len}-bit buffer")]
    Overrun { at: usize, wanted: usize, len: usize },
    #[error("Elias-gamma cannot encode 0")]
    ZeroNotEncodable,
    #[error("malformed gamma code at offset {at}")]
    MalformedCode { at: usize },
    #[error("invalid bit character {0:?}")]
    BadChar(char),
}

/// A finite sequence of bits. Ordering is lexicographic with `0 < 1`, so
/// equal-length strings sort as unsigned integers.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BitString {
    bits: Vec<bool>,
}

impl BitString {
    /// The empty string.
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        Self {
            bits: Vec::with_capacity(n),
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self { bits: vec![false; n] }
    }

    pub fn ones(n: usize) -> Self {
        Self { bits: vec![true; n] }
    }

    /// `width` low bits of `value`, most significant first.
    pub fn from_u64(value: u64, width: usize) -> Self {
        let mut out = Self::with_capacity(width);
        out.push_u64(value, width);
        out
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<bool> {
        self.bits.get(i).copied()
    }

    /// Panics when `i` is out of range.
    pub fn bit(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn set(&mut self, i: usize, b: bool) {
        self.bits[i] = b;
    }

    pub fn flip(&mut self, i: usize) {
        self.bits[i] = !self.bits[i];
    }

    pub fn push(&mut self, b: bool) {
        self.bits.push(b);
    }

    pub fn push_u64(&mut self, value: u64, width: usize) {
        for k in (0..width).rev() {
            self.bits.push(k < 64 && (value >> k) & 1 == 1);
        }
    }

    pub fn extend_from(&mut self, other: &BitString) {
        self.bits.extend_from_slice(&other.bits);
    }

    pub fn concat(parts: &[&BitString]) -> Self {
        let mut out = Self::with_capacity(parts.iter().map(|p| p.len()).sum());
        for p in parts {
            out.extend_from(p);
        }
        out
    }

    pub fn slice(&self, start: usize, end: usize) -> Self {
        Self {
            bits: self.bits[start..end].to_vec(),
        }
    }

    /// First `n` bits (the n-bit restriction); the whole string when shorter.
    pub fn prefix(&self, n: usize) -> Self {
        self.slice(0, n.min(self.len()))
    }

    pub fn truncate(&mut self, n: usize) {
        self.bits.truncate(n);
    }

    pub fn as_bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        self.bits.iter().copied()
    }

    /// MSB-first integer value. `None` beyond 64 bits.
    pub fn to_u64(&self) -> Option<u64> {
        if self.len() > 64 {
            return None;
        }
        Some(self.bits.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64))
    }

    /// Packs into bytes, zero-padding the final byte.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.len().div_ceil(8)];
        for (i, &b) in self.bits.iter().enumerate() {
            if b {
                out[i / 8] |= 0x80 >> (i % 8);
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], nbits: usize) -> Result<Self, BitError> {
        if nbits > bytes.len() * 8 {
            return Err(BitError::Overrun {
                at: 0,
                wanted: nbits,
                len: bytes.len() * 8,
            });
        }
        Ok(Self {
            bits: (0..nbits).map(|i| bytes[i / 8] & (0x80 >> (i % 8)) != 0).collect(),
        })
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\"{self}\"")
    }
}

impl FromStr for BitString {
    type Err = BitError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(BitError::BadChar(other)),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Self::from_bits)
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Append-only bit sink; its length is exactly the number of bits written.
#[derive(Debug, Default, Clone)]
pub struct BitWriter {
    buf: BitString,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn write_bit(&mut self, b: bool) {
        self.buf.push(b);
    }

    pub fn write_bits(&mut self, value: u64, width: usize) {
        self.buf.push_u64(value, width);
    }

    pub fn write_bitstring(&mut self, s: &BitString) {
        self.buf.extend_from(s);
    }

    pub fn write_gamma(&mut self, k: u64) -> Result<(), BitError> {
        if k == 0 {
            return Err(BitError::ZeroNotEncodable);
        }
        let nbits = 64 - k.leading_zeros() as usize;
        for _ in 1..nbits {
            self.buf.push(false);
        }
        self.buf.push_u64(k, nbits);
        Ok(())
    }

    pub fn finish(self) -> BitString {
        self.buf
    }
}

/// Cursor over a bitstring. Reads past the end are errors, never padding.
#[derive(Debug, Clone)]
pub struct BitReader<'a> {
    bits: &'a [bool],
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(s: &'a BitString) -> Self {
        Self {
            bits: s.as_bits(),
            pos: 0,
        }
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.bits.len() - self.pos
    }

    pub fn is_at_end(&self) -> bool {
        self.pos == self.bits.len()
    }

    pub fn read_bit(&mut self) -> Result<bool, BitError> {
        let b = *self.bits.get(self.pos).ok_or(BitError::Overrun {
            at: self.pos,
            wanted: 1,
            len: self.bits.len(),
        })?;
        self.pos += 1;
        Ok(b)
    }

    /// Reads `width <= 64` bits as an MSB-first integer.
    pub fn read_bits(&mut self, width: usize) -> Result<u64, BitError> {
        debug_assert!(width <= 64);
        self.check(width)?;
        let v = self.bits[self.pos..self.pos + width]
            .iter()
            .fold(0u64, |acc, &b| (acc << 1) | b as u64);
        self.pos += width;
        Ok(v)
    }

    pub fn read_bitstring(&mut self, n: usize) -> Result<BitString, BitError> {
        self.check(n)?;
        let out = BitString::from_bits(self.bits[self.pos..self.pos + n].to_vec());
        self.pos += n;
        Ok(out)
    }

    pub fn read_gamma(&mut self) -> Result<u64, BitError> {
        let start = self.pos;
        let mut zeros = 0usize;
        loop {
            match self.bits.get(self.pos) {
                None => return Err(BitError::MalformedCode { at: start }),
                Some(false) => {
                    zeros += 1;
                    self.pos += 1;
                    if zeros > 63 {
                        return Err(BitError::MalformedCode { at: start });
                    }
                }
                Some(true) => break,
            }
        }
        if self.remaining() < zeros + 1 {
            self.pos = start;
            return Err(BitError::MalformedCode { at: start });
        }
        self.read_bits(zeros + 1)
    }

    fn check(&self, n: usize) -> Result<(), BitError> {
        if self.remaining() < n {
            Err(BitError::Overrun {
                at: self.pos,
                wanted: n,
                len: self.bits.len(),
            })
        } else {
            Ok(())
        }
    }
}

/// Elias-gamma code of `k >= 1`.
pub fn gamma_encode(k: u64) -> Result<BitString, BitError> {
    let mut w = BitWriter::new();
    w.write_gamma(k)?;
    Ok(w.finish())
}

pub fn gamma_decode(r: &mut BitReader<'_>) -> Result<u64, BitError> {
    r.read_gamma()
}

/// Length of the gamma code of `k >= 1`: `2 floor(log2 k) + 1`.
pub fn gamma_len(k: u64) -> usize {
    debug_assert!(k >= 1);
    2 * (63 - k.leading_zeros() as usize) + 1
}

/// `max(1, ceil(log2 x))`: the width of a fixed-size field holding `x` values.
pub fn field_width(x: usize) -> usize {
    if x <= 2 {
        1
    } else {
        (usize::BITS - (x - 1).leading_zeros()) as usize
    }
}
