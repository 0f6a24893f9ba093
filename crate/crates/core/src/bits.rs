//! Fixed-length bit strings used for codewords and minutiae descriptors.

use alloc::vec::Vec;
use core::fmt;
use core::ops::{BitXor, BitXorAssign};

use rand::Rng;

/// Bit `i` lives in word `i / 64` at position `i % 64`.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitString {
    words: Vec<u64>,
    len: usize,
}

impl BitString {
    pub fn zeros(len: usize) -> Self {
        Self {
            words: alloc::vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Self {
        let mut s = Self::zeros(len);
        for w in &mut s.words {
            *w = rng.gen();
        }
        s.mask_tail();
        s
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut s = Self::zeros(0);
        for b in bits {
            s.push(b);
        }
        s
    }

    fn mask_tail(&mut self) {
        let r = self.len % 64;
        if r != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << r) - 1;
            }
        }
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
    pub fn set(&mut self, i: usize, bit: bool) {
        debug_assert!(i < self.len);
        let mask = 1u64 << (i % 64);
        if bit {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        self.words[i / 64] ^= 1u64 << (i % 64);
    }

    pub fn push(&mut self, bit: bool) {
        if self.len % 64 == 0 {
            self.words.push(0);
        }
        self.len += 1;
        self.set(self.len - 1, bit);
    }

    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// Indices of set bits, ascending.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            core::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let tz = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + tz)
            })
        })
    }

    /// Bits `start..start + len` as a new string.
    pub fn slice(&self, start: usize, len: usize) -> Self {
        Self::from_bits((start..start + len).map(|i| self.get(i)))
    }

    pub fn concat(parts: &[BitString]) -> Self {
        Self::from_bits(parts.iter().flat_map(|p| p.iter()))
    }

    /// Big-endian hex with the first character holding bit 0's nibble
    /// (bit 0 is the most significant bit of the first nibble); the string
    /// is zero-padded to a whole number of nibbles.
    pub fn to_hex(&self) -> alloc::string::String {
        let mut out = alloc::string::String::with_capacity(self.len.div_ceil(4));
        for chunk in 0..self.len.div_ceil(4) {
            let mut nib = 0u8;
            for j in 0..4 {
                let i = chunk * 4 + j;
                nib <<= 1;
                if i < self.len && self.get(i) {
                    nib |= 1;
                }
            }
            out.push(char::from_digit(nib as u32, 16).unwrap_or('0'));
        }
        out
    }

    /// Inverse of [`Self::to_hex`]; `None` on a bad digit, wrong digit
    /// count, or nonzero padding bits.
    pub fn from_hex(hex: &str, len: usize) -> Option<Self> {
        if hex.len() != len.div_ceil(4) {
            return None;
        }
        let mut s = Self::zeros(len);
        for (chunk, ch) in hex.chars().enumerate() {
            let nib = ch.to_digit(16)?;
            for j in 0..4 {
                let bit = (nib >> (3 - j)) & 1 == 1;
                let i = chunk * 4 + j;
                if i < len {
                    s.set(i, bit);
                } else if bit {
                    return None;
                }
            }
        }
        Some(s)
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({}; {})", self.len, self.to_hex())
    }
}

impl BitXorAssign<&BitString> for BitString {
    fn bitxor_assign(&mut self, rhs: &BitString) {
        assert_eq!(self.len, rhs.len, "bit length mismatch");
        for (a, b) in self.words.iter_mut().zip(&rhs.words) {
            *a ^= b;
        }
    }
}

impl BitXor<&BitString> for &BitString {
    type Output = BitString;
    fn bitxor(self, rhs: &BitString) -> BitString {
        let mut out = self.clone();
        out ^= rhs;
        out
    }
}
