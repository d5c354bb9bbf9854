use std::fmt;

use rand::Rng;

/// A finite 0/1 string. Storage is 0-indexed; wherever a polynomial exponent
/// is involved, the bit stored at index `i` is "position `i+1`" and
/// contributes exponent `i`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitString {
    bits: Vec<u8>,
}

impl BitString {
    pub fn new(bits: Vec<u8>) -> Self {
        debug_assert!(bits.iter().all(|&b| b <= 1));
        BitString { bits }
    }

    pub fn zeros(len: usize) -> Self {
        BitString { bits: vec![0; len] }
    }

    pub fn ones(len: usize) -> Self {
        BitString { bits: vec![1; len] }
    }

    /// Alternating 0101... starting with 0.
    pub fn alternating(len: usize) -> Self {
        BitString {
            bits: (0..len).map(|i| (i % 2) as u8).collect(),
        }
    }

    pub fn random<R: Rng>(len: usize, rng: &mut R) -> Self {
        BitString {
            bits: (0..len).map(|_| rng.gen_range(0..=1u8)).collect(),
        }
    }

    /// Parses "10110"; anything but '0'/'1' is rejected.
    pub fn parse(s: &str) -> Option<Self> {
        let mut bits = Vec::with_capacity(s.len());
        for ch in s.chars() {
            match ch {
                '0' => bits.push(0),
                '1' => bits.push(1),
                _ => return None,
            }
        }
        Some(BitString { bits })
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, i: usize) -> u8 {
        self.bits[i]
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.bits
    }

    pub fn push(&mut self, b: u8) {
        debug_assert!(b <= 1);
        self.bits.push(b);
    }

    /// Signed value 2b-1 of the bit at index `i`.
    pub fn signed(&self, i: usize) -> i64 {
        2 * self.bits[i] as i64 - 1
    }

    /// (-1)^bit at index `i`.
    pub fn sign_flip(&self, i: usize) -> f64 {
        if self.bits[i] == 0 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn slice(&self, start: usize, end: usize) -> BitString {
        BitString {
            bits: self.bits[start..end].to_vec(),
        }
    }

    pub fn suffix(&self, start: usize) -> BitString {
        self.slice(start.min(self.len()), self.len())
    }

    pub fn concat(&self, other: &BitString) -> BitString {
        let mut bits = self.bits.clone();
        bits.extend_from_slice(&other.bits);
        BitString { bits }
    }

    pub fn complement(&self) -> BitString {
        BitString {
            bits: self.bits.iter().map(|&b| 1 - b).collect(),
        }
    }

    /// Smallest period `p >= 1` such that s[i] == s[i+p] for all valid i,
    /// restricted to p < len. Returns None for strings of length <= 1.
    pub fn smallest_period(&self) -> Option<usize> {
        let n = self.len();
        (1..n).find(|&p| (0..n - p).all(|i| self.bits[i] == self.bits[i + p]))
    }

    /// True if the string has some period `p <= max_period` (p < len).
    pub fn has_period_at_most(&self, max_period: usize) -> bool {
        let n = self.len();
        (1..n.min(max_period + 1)).any(|p| (0..n - p).all(|i| self.bits[i] == self.bits[i + p]))
    }

    /// 0-based start indices of occurrences of `pat` as a consecutive substring.
    pub fn occurrences(&self, pat: &BitString) -> Vec<usize> {
        if pat.is_empty() || pat.len() > self.len() {
            return vec![];
        }
        (0..=self.len() - pat.len())
            .filter(|&i| self.bits[i..i + pat.len()] == pat.bits[..])
            .collect()
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            write!(f, "{}", b)?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({})", self)
    }
}
