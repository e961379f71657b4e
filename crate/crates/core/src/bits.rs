//! Fixed-length bitstrings.
//!
//! Position `i` of a [`BitString`] is the bit of variable (qubit) `i`. The
//! text form writes position 0 first, so `"100"` sets variable 0 only. For
//! `n <= 64` a bitstring maps onto the computational-basis index `k` used by
//! the simulator, with bit `m` of `k` holding variable `m`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString {
    len: usize,
    words: Vec<u64>,
}

impl BitString {
    pub fn zeros(len: usize) -> Self {
        BitString {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    /// Bitstring of `len` variables whose bit `m` is bit `m` of `index`.
    pub fn from_index(index: u64, len: usize) -> Self {
        assert!(len <= 64, "basis indices only cover up to 64 variables");
        let mut b = BitString::zeros(len);
        if len > 0 {
            let mask = if len == 64 { u64::MAX } else { (1u64 << len) - 1 };
            b.words[0] = index & mask;
        }
        b
    }

    /// Basis index, available when the bitstring has at most 64 variables.
    pub fn to_index(&self) -> Option<u64> {
        match self.len {
            0 => Some(0),
            1..=64 => Some(self.words[0]),
            _ => None,
        }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut b = BitString::zeros(bits.len());
        for (i, &v) in bits.iter().enumerate() {
            b.set(i, v);
        }
        b
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.len);
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i / 64] ^= 1u64 << (i % 64);
    }

    pub fn flipped(&self, i: usize) -> Self {
        let mut b = self.clone();
        b.flip(i);
        b
    }

    pub fn complement(&self) -> Self {
        let mut b = self.clone();
        for w in &mut b.words {
            *w = !*w;
        }
        b.clear_tail();
        b
    }

    /// Spin of variable `i` under `s = 1 - 2b`.
    #[inline]
    pub fn spin(&self, i: usize) -> f64 {
        if self.get(i) {
            -1.0
        } else {
            1.0
        }
    }

    pub fn spins(&self) -> Vec<i8> {
        (0..self.len).map(|i| if self.get(i) { -1 } else { 1 }).collect()
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn hamming_distance(&self, other: &BitString) -> usize {
        assert_eq!(self.len, other.len);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    fn clear_tail(&mut self) {
        let rem = self.len % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString(\"{self}\")")
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let mut b = BitString::zeros(s.len());
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => b.set(i, true),
                other => {
                    return Err(Error::param(format!(
                        "bitstring contains '{other}', expected only 0 and 1"
                    )))
                }
            }
        }
        Ok(b)
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_form_puts_variable_zero_first() {
        let b: BitString = "100".parse().unwrap();
        assert!(b.get(0));
        assert!(!b.get(2));
        assert_eq!(b.to_index(), Some(1));
        assert_eq!(BitString::from_index(6, 3).to_string(), "011");
    }

    #[test]
    fn complement_keeps_length() {
        let b: BitString = "10110".parse().unwrap();
        assert_eq!(b.complement().to_string(), "01001");
        assert_eq!(b.complement().complement(), b);
        let wide = BitString::zeros(70).complement();
        assert_eq!(wide.count_ones(), 70);
        assert_eq!(wide.to_index(), None);
    }

    #[test]
    fn rejects_non_binary_text() {
        assert!("10a".parse::<BitString>().is_err());
    }

    #[test]
    fn hamming_distance_counts_differences() {
        let a: BitString = "0000".parse().unwrap();
        let b: BitString = "1011".parse().unwrap();
        assert_eq!(a.hamming_distance(&b), 3);
    }
}
