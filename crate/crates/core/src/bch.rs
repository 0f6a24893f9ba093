//! Binary narrow-sense BCH codes with systematic encoding and
//! bounded-distance decoding (syndromes, Berlekamp-Massey, Chien search).
//!
//! Only the three instances used by descriptor-hardened vaults are exposed:
//! BCH(511,19) correcting 119 errors, BCH(31,6) correcting 7 and
//! BCH(15,5) correcting 3.

use alloc::vec::Vec;

use crate::bits::BitString;
use crate::error::{Error, Result};

/// Parameters of a supported binary BCH code.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BinaryCodeSpec {
    /// Code length in bits.
    pub m: usize,
    /// Message length in bits.
    pub ell: usize,
    /// Error-correction capability.
    pub nu: usize,
    /// Extension degree of the locator field GF(2^field_bits).
    pub field_bits: u32,
    /// Primitive polynomial of the locator field, including the top term.
    pub primitive: u32,
}

impl BinaryCodeSpec {
    pub const BCH_511_19: Self = Self {
        m: 511,
        ell: 19,
        nu: 119,
        field_bits: 9,
        primitive: 0x211,
    };
    pub const BCH_31_6: Self = Self {
        m: 31,
        ell: 6,
        nu: 7,
        field_bits: 5,
        primitive: 0x25,
    };
    pub const BCH_15_5: Self = Self {
        m: 15,
        ell: 5,
        nu: 3,
        field_bits: 4,
        primitive: 0x13,
    };

    pub const ALL: [Self; 3] = [Self::BCH_511_19, Self::BCH_31_6, Self::BCH_15_5];

    /// Looks up a supported code by `(length, dimension)`.
    pub fn lookup(m: usize, ell: usize) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.m == m && c.ell == ell)
    }

    /// One-byte identifier used by the record formats.
    pub fn id(&self) -> u8 {
        match (self.m, self.ell) {
            (511, 19) => 1,
            (31, 6) => 2,
            (15, 5) => 3,
            _ => 0,
        }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        match id {
            1 => Some(Self::BCH_511_19),
            2 => Some(Self::BCH_31_6),
            3 => Some(Self::BCH_15_5),
            _ => None,
        }
    }
}

/// GF(2^q) with log/antilog tables, q <= 15.
#[derive(Clone, Debug)]
struct SmallField {
    order: usize,
    exp: Vec<u16>,
    log: Vec<u16>,
}

impl SmallField {
    fn new(bits: u32, primitive: u32) -> Self {
        let size = 1usize << bits;
        let order = size - 1;
        let mut exp = alloc::vec![0u16; 2 * order];
        let mut log = alloc::vec![0u16; size];
        let mut a = 1u32;
        for i in 0..order {
            exp[i] = a as u16;
            exp[i + order] = a as u16;
            log[a as usize] = i as u16;
            a <<= 1;
            if a & size as u32 != 0 {
                a ^= primitive;
            }
        }
        Self { order, exp, log }
    }

    #[inline]
    fn mul(&self, a: u16, b: u16) -> u16 {
        if a == 0 || b == 0 {
            0
        } else {
            self.exp[self.log[a as usize] as usize + self.log[b as usize] as usize]
        }
    }

    #[inline]
    fn inv(&self, a: u16) -> u16 {
        debug_assert!(a != 0);
        self.exp[(self.order - self.log[a as usize] as usize) % self.order]
    }

    /// alpha^e for any non-negative exponent.
    #[inline]
    fn pow_alpha(&self, e: usize) -> u16 {
        self.exp[e % self.order]
    }
}

/// Encoder/decoder for one [`BinaryCodeSpec`].
#[derive(Clone, Debug)]
pub struct BchCode {
    spec: BinaryCodeSpec,
    field: SmallField,
    /// Generator polynomial over GF(2), bit i = coefficient of X^i.
    generator: Vec<bool>,
}

impl BchCode {
    pub fn new(spec: BinaryCodeSpec) -> Result<Self> {
        let field = SmallField::new(spec.field_bits, spec.primitive);
        if field.order != spec.m {
            return Err(Error::InvalidParameter("code length must be 2^q - 1"));
        }
        // product of the minimal polynomials of alpha^1 .. alpha^(2 nu)
        let n = spec.m;
        let mut seen = alloc::vec![false; n];
        let mut generator: Vec<u16> = alloc::vec![1];
        for i in 1..=2 * spec.nu {
            let i = i % n;
            if seen[i] {
                continue;
            }
            let mut coset = Vec::new();
            let mut j = i;
            while !seen[j] {
                seen[j] = true;
                coset.push(j);
                j = (j * 2) % n;
            }
            let mut minimal: Vec<u16> = alloc::vec![1];
            for &e in &coset {
                minimal = poly_mul_linear(&field, &minimal, field.pow_alpha(e));
            }
            debug_assert!(minimal.iter().all(|&c| c <= 1));
            generator = poly_mul(&field, &generator, &minimal);
        }
        let generator: Vec<bool> = generator.iter().map(|&c| c == 1).collect();
        if generator.len() - 1 != spec.m - spec.ell {
            return Err(Error::InvalidParameter("generator degree does not match code dimension"));
        }
        Ok(Self {
            spec,
            field,
            generator,
        })
    }

    pub fn spec(&self) -> &BinaryCodeSpec {
        &self.spec
    }

    pub fn generator(&self) -> &[bool] {
        &self.generator
    }

    /// Systematic encoding: parity in bits `0..m-ell`, message in the top
    /// `ell` bits (message bit j at position `m - ell + j`).
    pub fn encode(&self, message: u32) -> Result<BitString> {
        let (m, ell) = (self.spec.m, self.spec.ell);
        if ell < 32 && message >> ell != 0 {
            return Err(Error::MessageOutOfRange {
                message,
                bits: ell as u32,
            });
        }
        let r = m - ell;
        // remainder of message(X) * X^r modulo g(X), via an LFSR
        let mut reg = alloc::vec![false; r];
        for j in (0..ell).rev() {
            let feedback = ((message >> j) & 1 == 1) ^ reg[r - 1];
            for i in (1..r).rev() {
                reg[i] = reg[i - 1] ^ (feedback && self.generator[i]);
            }
            reg[0] = feedback && self.generator[0];
        }
        let mut word = BitString::zeros(m);
        for (i, &b) in reg.iter().enumerate() {
            word.set(i, b);
        }
        for j in 0..ell {
            word.set(r + j, (message >> j) & 1 == 1);
        }
        Ok(word)
    }

    /// Message carried by a codeword (no correction).
    pub fn extract_message(&self, codeword: &BitString) -> u32 {
        let r = self.spec.m - self.spec.ell;
        (0..self.spec.ell).fold(0u32, |acc, j| acc | ((codeword.get(r + j) as u32) << j))
    }

    /// Syndromes S_1 .. S_{2 nu}; all zero iff `word` is a codeword.
    fn syndromes(&self, word: &BitString) -> Vec<u16> {
        let t2 = 2 * self.spec.nu;
        let n = self.spec.m;
        let mut s = alloc::vec![0u16; t2];
        for pos in word.ones() {
            // odd syndromes only; exponent pos * j kept reduced mod n
            let step = (2 * pos) % n;
            let mut e = pos % n;
            for j in (0..t2).step_by(2) {
                s[j] ^= self.field.exp[e];
                e += step;
                if e >= n {
                    e -= n;
                }
            }
        }
        // over GF(2), S_2j = S_j^2
        for j in (1..t2).step_by(2) {
            let half = s[(j + 1) / 2 - 1];
            s[j] = self.field.mul(half, half);
        }
        s
    }

    /// Bounded-distance decoding. Returns the corrected codeword and the
    /// number of corrected bits, or `None` if no codeword lies within
    /// distance `nu`.
    pub fn correct(&self, word: &BitString) -> Result<Option<(BitString, usize)>> {
        if word.len() != self.spec.m {
            return Err(Error::DimensionMismatch {
                expected: self.spec.m,
                got: word.len(),
            });
        }
        let s = self.syndromes(word);
        if s.iter().all(|&x| x == 0) {
            return Ok(Some((word.clone(), 0)));
        }
        let f = &self.field;
        // Berlekamp-Massey
        let mut lambda: Vec<u16> = alloc::vec![1];
        let mut prev: Vec<u16> = alloc::vec![1];
        let mut l = 0usize;
        let mut shift = 1usize;
        let mut prev_disc = 1u16;
        for r in 0..s.len() {
            // binary code: every second discrepancy vanishes
            if r % 2 == 1 {
                shift += 1;
                continue;
            }
            let mut d = s[r];
            for i in 1..=l.min(lambda.len() - 1) {
                d ^= f.mul(lambda[i], s[r - i]);
            }
            if d == 0 {
                shift += 1;
                continue;
            }
            let coef = f.mul(d, f.inv(prev_disc));
            let mut next = lambda.clone();
            if next.len() < prev.len() + shift {
                next.resize(prev.len() + shift, 0);
            }
            for (i, &p) in prev.iter().enumerate() {
                next[i + shift] ^= f.mul(coef, p);
            }
            if 2 * l <= r {
                l = r + 1 - l;
                if l > self.spec.nu {
                    // the locator degree never shrinks again
                    return Ok(None);
                }
                prev = lambda;
                prev_disc = d;
                shift = 1;
            } else {
                shift += 1;
            }
            lambda = next;
        }
        while lambda.len() > 1 && *lambda.last().unwrap_or(&0) == 0 {
            lambda.pop();
        }
        let degree = lambda.len() - 1;
        if degree != l || degree > self.spec.nu {
            return Ok(None);
        }
        // Chien search: error at position p iff lambda(alpha^-p) = 0. Terms
        // are tracked as logs: term i at position p is log(lambda_i) - i*p.
        let n = self.spec.m;
        let mut corrected = word.clone();
        let mut found = 0usize;
        let mut terms: Vec<(usize, usize)> = lambda
            .iter()
            .enumerate()
            .skip(1)
            .filter(|(_, &c)| c != 0)
            .map(|(i, &c)| (f.log[c as usize] as usize, i % n))
            .collect();
        for p in 0..n {
            let mut acc = lambda[0];
            for (log, step) in terms.iter_mut() {
                acc ^= f.exp[*log];
                *log = if *log >= *step { *log - *step } else { *log + n - *step };
            }
            if acc == 0 {
                corrected.flip(p);
                found += 1;
                if found > degree {
                    return Ok(None);
                }
            }
        }
        if found != degree {
            return Ok(None);
        }
        if self.syndromes(&corrected).iter().any(|&x| x != 0) {
            return Ok(None);
        }
        Ok(Some((corrected, found)))
    }

    /// Bounded-distance decoding to a message.
    pub fn decode(&self, word: &BitString) -> Result<Option<u32>> {
        Ok(self.correct(word)?.map(|(c, _)| self.extract_message(&c)))
    }
}

fn poly_mul_linear(f: &SmallField, p: &[u16], root: u16) -> Vec<u16> {
    // p(X) * (X + root)
    let mut out = alloc::vec![0u16; p.len() + 1];
    for (i, &c) in p.iter().enumerate() {
        out[i + 1] ^= c;
        out[i] ^= f.mul(c, root);
    }
    out
}

fn poly_mul(f: &SmallField, a: &[u16], b: &[u16]) -> Vec<u16> {
    let mut out = alloc::vec![0u16; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] ^= f.mul(x, y);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn code(spec: BinaryCodeSpec) -> BchCode {
        BchCode::new(spec).unwrap()
    }

    fn flip_random(rng: &mut ChaCha8Rng, word: &mut BitString, count: usize) {
        for p in rand::seq::index::sample(rng, word.len(), count) {
            word.flip(p);
        }
    }

    #[test]
    fn generator_degrees_match_dimensions() {
        for spec in BinaryCodeSpec::ALL {
            let c = code(spec);
            assert_eq!(c.generator().len() - 1, spec.m - spec.ell);
            assert!(c.generator()[0]);
        }
    }

    #[test]
    fn zero_message_is_zero_word() {
        for spec in BinaryCodeSpec::ALL {
            assert_eq!(code(spec).encode(0).unwrap().weight(), 0);
        }
    }

    #[test]
    fn encoding_is_linear() {
        let c = code(BinaryCodeSpec::BCH_31_6);
        for a in 0..64u32 {
            for b in 0..64u32 {
                let lhs = c.encode(a ^ b).unwrap();
                let rhs = &c.encode(a).unwrap() ^ &c.encode(b).unwrap();
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn bch_15_5_minimum_distance_is_seven() {
        let c = code(BinaryCodeSpec::BCH_15_5);
        let words: Vec<_> = (0..32).map(|a| c.encode(a).unwrap()).collect();
        let mut min = usize::MAX;
        for i in 0..32 {
            for j in i + 1..32 {
                min = min.min((&words[i] ^ &words[j]).weight());
            }
        }
        assert_eq!(min, 7);
    }

    #[test]
    fn clean_round_trip_exhaustive_small_codes() {
        for spec in [BinaryCodeSpec::BCH_15_5, BinaryCodeSpec::BCH_31_6] {
            let c = code(spec);
            for msg in 0..(1u32 << spec.ell) {
                let w = c.encode(msg).unwrap();
                assert_eq!(c.decode(&w).unwrap(), Some(msg));
                assert_eq!(c.extract_message(&w), msg);
            }
        }
    }

    #[test]
    fn corrects_exactly_nu_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for spec in BinaryCodeSpec::ALL {
            let c = code(spec);
            for _ in 0..100 {
                let msg = rng.gen_range(0..1u32 << spec.ell);
                let mut w = c.encode(msg).unwrap();
                flip_random(&mut rng, &mut w, spec.nu);
                assert_eq!(c.decode(&w).unwrap(), Some(msg), "{spec:?}");
            }
        }
    }

    #[test]
    fn never_accepts_beyond_radius() {
        // exhaustive over all 2^15 words: a decoded message must be within 3
        let c = code(BinaryCodeSpec::BCH_15_5);
        let words: Vec<_> = (0..32).map(|a| c.encode(a).unwrap()).collect();
        let mut decodable = 0;
        for v in 0..(1u32 << 15) {
            let w = BitString::from_bits((0..15).map(|i| (v >> i) & 1 == 1));
            let nearest = words.iter().map(|c| (&w ^ c).weight()).min().unwrap();
            match c.decode(&w).unwrap() {
                Some(msg) => {
                    decodable += 1;
                    assert!((&w ^ &words[msg as usize]).weight() <= 3);
                }
                None => assert!(nearest > 3),
            }
        }
        // sphere packing: 32 * (1 + 15 + 105 + 455)
        assert_eq!(decodable, 32 * 576);
    }

    #[test]
    fn nu_plus_one_errors_between_codewords() {
        // flip 4 bits of c(a) toward c(b), with d(c(a), c(b)) = 7
        let c = code(BinaryCodeSpec::BCH_15_5);
        let a = c.encode(0).unwrap();
        let b = (1..32)
            .map(|m| c.encode(m).unwrap())
            .find(|w| w.weight() == 7)
            .unwrap();
        let diff: Vec<_> = b.ones().collect();
        let mut w = a.clone();
        for &p in &diff[..4] {
            w.flip(p);
        }
        let got = c.decode(&w).unwrap();
        assert_ne!(got, Some(0));
        if let Some(msg) = got {
            assert!((&w ^ &c.encode(msg).unwrap()).weight() <= 3);
        }
    }

    #[test]
    fn wrong_length_is_rejected() {
        let c = code(BinaryCodeSpec::BCH_15_5);
        assert!(c.decode(&BitString::zeros(14)).is_err());
        assert!(c.encode(32).is_err());
    }
}
