use std::fmt;
use std::ops::Range;

/// An owned sequence of bits.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct BitString {
    bits: Vec<bool>,
}

impl BitString {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        Self {
            bits: Vec::with_capacity(n),
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            bits: vec![false; n],
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> Option<bool> {
        self.bits.get(i).copied()
    }

    #[inline]
    pub fn set(&mut self, i: usize, bit: bool) {
        self.bits[i] = bit;
    }

    #[inline]
    pub fn push(&mut self, bit: bool) {
        self.bits.push(bit);
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = bool> + '_ {
        self.bits.iter().copied()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.bits
    }

    pub fn extend_from(&mut self, other: &BitString) {
        self.bits.extend_from_slice(&other.bits);
    }

    pub fn slice(&self, range: Range<usize>) -> BitString {
        Self {
            bits: self.bits[range].to_vec(),
        }
    }

    pub fn truncate(&mut self, n: usize) {
        self.bits.truncate(n);
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Appends the low `width` bits of `value`, most significant first.
    pub fn push_uint(&mut self, value: u64, width: u32) {
        debug_assert!(width <= 64);
        debug_assert!(width == 64 || value >> width == 0, "{value} wider than {width} bits");
        for shift in (0..width).rev() {
            self.bits.push((value >> shift) & 1 == 1);
        }
    }

    /// Reads `width` bits starting at `pos` as an unsigned MSB-first integer.
    pub fn read_uint(&self, pos: usize, width: u32) -> Option<u64> {
        let end = pos.checked_add(width as usize)?;
        let field = self.bits.get(pos..end)?;
        Some(field.iter().fold(0, |acc, &b| (acc << 1) | u64::from(b)))
    }

    /// Bytes unpacked most significant bit first.
    pub fn from_bytes(bytes: &[u8]) -> Self {
        let mut out = Self::with_capacity(bytes.len() * 8);
        for &byte in bytes {
            out.push_uint(u64::from(byte), 8);
        }
        out
    }

    /// Packs MSB-first; a trailing partial byte is zero-filled.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.bits
            .chunks(8)
            .map(|chunk| {
                chunk
                    .iter()
                    .enumerate()
                    .fold(0u8, |acc, (i, &b)| acc | (u8::from(b) << (7 - i)))
            })
            .collect()
    }
}

/// Sequential reader over a payload. Once the payload runs out it keeps
/// yielding `fill` and counts how many fill bits were handed out.
#[derive(Debug, Clone)]
pub struct BitReader<'a> {
    bits: &'a [bool],
    pos: usize,
    fill: bool,
    filled: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(bits: &'a BitString, fill: bool) -> Self {
        Self {
            bits: bits.as_slice(),
            pos: 0,
            fill,
            filled: 0,
        }
    }

    #[inline]
    pub fn next_bit(&mut self) -> bool {
        match self.bits.get(self.pos) {
            Some(&b) => {
                self.pos += 1;
                b
            }
            None => {
                self.filled += 1;
                self.fill
            }
        }
    }

    #[inline]
    pub fn is_exhausted(&self) -> bool {
        self.pos >= self.bits.len()
    }

    /// Payload bits consumed so far (fill excluded).
    #[inline]
    pub fn consumed(&self) -> usize {
        self.pos
    }

    /// Fill bits handed out after the payload ran out.
    #[inline]
    pub fn filled(&self) -> usize {
        self.filled
    }

    pub fn remaining(&self) -> BitString {
        self.bits[self.pos.min(self.bits.len())..].iter().copied().collect()
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        const SHOWN: usize = 64;
        write!(f, "BitString[{}](", self.len())?;
        for b in self.bits.iter().take(SHOWN) {
            f.write_str(if *b { "1" } else { "0" })?;
        }
        if self.len() > SHOWN {
            f.write_str("...")?;
        }
        f.write_str(")")
    }
}

impl FromIterator<bool> for BitString {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        Self {
            bits: iter.into_iter().collect(),
        }
    }
}

impl Extend<bool> for BitString {
    fn extend<I: IntoIterator<Item = bool>>(&mut self, iter: I) {
        self.bits.extend(iter);
    }
}

impl From<Vec<bool>> for BitString {
    fn from(bits: Vec<bool>) -> Self {
        Self { bits }
    }
}

impl From<&str> for BitString {
    /// Parses a string of '0'/'1' characters; anything else is skipped.
    fn from(s: &str) -> Self {
        s.chars()
            .filter_map(|c| match c {
                '0' => Some(false),
                '1' => Some(true),
                _ => None,
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uint_round_trip() {
        let mut b = BitString::new();
        b.push_uint(0x4450564F, 32);
        b.push_uint(5, 3);
        assert_eq!(b.len(), 35);
        assert_eq!(b.read_uint(0, 32), Some(0x4450564F));
        assert_eq!(b.read_uint(32, 3), Some(5));
        assert_eq!(b.read_uint(33, 3), None);
    }

    #[test]
    fn bytes_msb_first() {
        let b = BitString::from_bytes(&[0b1000_0001, 0x0F]);
        assert_eq!(b, BitString::from("10000001 00001111"));
        assert_eq!(b.to_bytes(), vec![0x81, 0x0F]);
        assert_eq!(BitString::from("101").to_bytes(), vec![0b1010_0000]);
    }

    #[test]
    fn debug_is_compact() {
        let s = format!("{:?}", BitString::zeros(100));
        assert!(s.starts_with("BitString[100]("));
        assert!(s.ends_with("...)"));
    }
}
