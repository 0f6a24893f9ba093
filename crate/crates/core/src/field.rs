//! Arithmetic in GF(2^16), secret polynomials and their canonical digest.
//!
//! Elements are 16-bit labels read as binary polynomials modulo the
//! primitive polynomial `x^16 + x^12 + x^3 + x + 1`. Multiplication and
//! inversion go through compile-time log/antilog tables.

use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, AddAssign, Div, Mul, MulAssign, Sub};

use rand::Rng;
use sha1::{Digest, Sha1};

use crate::error::{Error, Result};

/// Reduction polynomial, including the x^16 term.
pub const MODULUS: u32 = 0x1_100B;

/// Number of elements in the field.
pub const ORDER: usize = 1 << 16;

const GROUP_ORDER: usize = ORDER - 1;

struct Tables {
    exp: [u16; 2 * GROUP_ORDER],
    log: [u16; ORDER],
}

const fn build_tables() -> Tables {
    let mut exp = [0u16; 2 * GROUP_ORDER];
    let mut log = [0u16; ORDER];
    let mut a: u32 = 1;
    let mut i = 0;
    while i < GROUP_ORDER {
        exp[i] = a as u16;
        exp[i + GROUP_ORDER] = a as u16;
        log[a as usize] = i as u16;
        a <<= 1;
        if a & 0x1_0000 != 0 {
            a ^= MODULUS;
        }
        i += 1;
    }
    Tables { exp, log }
}

static TABLES: Tables = build_tables();

/// An element of GF(2^16).
#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FieldElement(u16);

impl FieldElement {
    pub const ZERO: Self = Self(0);
    pub const ONE: Self = Self(1);

    #[inline]
    pub const fn new(value: u16) -> Self {
        Self(value)
    }

    #[inline]
    pub const fn value(self) -> u16 {
        self.0
    }

    #[inline]
    pub const fn is_zero(self) -> bool {
        self.0 == 0
    }

    /// Multiplicative inverse; zero is rejected.
    #[inline]
    pub fn inv(self) -> Result<Self> {
        if self.0 == 0 {
            return Err(Error::ZeroInverse);
        }
        let l = TABLES.log[self.0 as usize] as usize;
        Ok(Self(TABLES.exp[GROUP_ORDER - l]))
    }

    /// Uniform element.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self(rng.gen())
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#06x}", self.0)
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04x}", self.0)
    }
}

impl From<u16> for FieldElement {
    fn from(v: u16) -> Self {
        Self(v)
    }
}

impl Add for FieldElement {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Self(self.0 ^ rhs.0)
    }
}

impl AddAssign for FieldElement {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        self.0 ^= rhs.0;
    }
}

// characteristic 2: subtraction is addition
impl Sub for FieldElement {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Self(self.0 ^ rhs.0)
    }
}

impl Mul for FieldElement {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        if self.0 == 0 || rhs.0 == 0 {
            return Self(0);
        }
        let l = TABLES.log[self.0 as usize] as usize + TABLES.log[rhs.0 as usize] as usize;
        Self(TABLES.exp[l])
    }
}

impl MulAssign for FieldElement {
    #[inline]
    fn mul_assign(&mut self, rhs: Self) {
        *self = *self * rhs;
    }
}

impl Div for FieldElement {
    type Output = Self;
    /// Panics on division by zero; use [`FieldElement::inv`] for a fallible path.
    #[inline]
    fn div(self, rhs: Self) -> Self {
        self * rhs.inv().expect("division by zero in GF(2^16)")
    }
}

/// A point `(x, y)` of a vault.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct VaultPoint {
    pub x: FieldElement,
    pub y: FieldElement,
}

impl VaultPoint {
    pub const fn new(x: FieldElement, y: FieldElement) -> Self {
        Self { x, y }
    }
}

/// SHA-1 digest of a polynomial's canonical serialization.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct SecretDigest(pub [u8; 20]);

impl SecretDigest {
    pub const LEN: usize = 20;

    pub fn as_bytes(&self) -> &[u8; 20] {
        &self.0
    }
}

impl fmt::Debug for SecretDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.0 {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

impl fmt::Display for SecretDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Polynomial of degree `< k`, stored as exactly `k` coefficients, lowest first.
///
/// Leading zero coefficients are kept so the serialized length always
/// equals the degree bound.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Polynomial {
    coeffs: Vec<FieldElement>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<FieldElement>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidParameter("degree bound must be at least 1"));
        }
        Ok(Self { coeffs })
    }

    pub fn zero(k: usize) -> Result<Self> {
        Self::new(alloc::vec![FieldElement::ZERO; k])
    }

    /// Uniformly random secret of degree bound `k`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Result<Self> {
        Self::new((0..k).map(|_| FieldElement::random(rng)).collect())
    }

    pub fn degree_bound(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coefficients(&self) -> &[FieldElement] {
        &self.coeffs
    }

    /// Horner evaluation.
    #[inline]
    pub fn eval(&self, x: FieldElement) -> FieldElement {
        self.coeffs
            .iter()
            .rev()
            .fold(FieldElement::ZERO, |acc, &c| acc * x + c)
    }

    /// Canonical form: `k` big-endian 16-bit words, lowest coefficient first.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.coeffs.iter().flat_map(|c| c.0.to_be_bytes()).collect()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() % 2 != 0 {
            return Err(Error::InvalidParameter("odd polynomial byte length"));
        }
        Self::new(
            bytes
                .chunks_exact(2)
                .map(|w| FieldElement(u16::from_be_bytes([w[0], w[1]])))
                .collect(),
        )
    }

    pub fn digest(&self) -> SecretDigest {
        digest_coefficients(&self.coeffs)
    }
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.coeffs.iter()).finish()
    }
}

fn digest_coefficients(coeffs: &[FieldElement]) -> SecretDigest {
    let mut h = Sha1::new();
    for c in coeffs {
        h.update(c.0.to_be_bytes());
    }
    SecretDigest(h.finalize().into())
}

/// Interpolates the unique polynomial of degree `< k` through exactly `k`
/// points with distinct abscissae.
pub fn interpolate(points: &[VaultPoint], k: usize) -> Result<Polynomial> {
    if points.len() != k || k == 0 {
        return Err(Error::WrongPointCount {
            expected: k,
            got: points.len(),
        });
    }
    let mut scratch = Interpolator::new(k);
    scratch.interpolate(points.iter().copied())?;
    Ok(Polynomial {
        coeffs: scratch.coeffs.clone(),
    })
}

/// Reusable buffers for repeated interpolation of `k` points, as done by
/// the decoders and attacks in their inner loops.
#[derive(Clone, Debug)]
pub struct Interpolator {
    k: usize,
    master: Vec<FieldElement>,
    quotient: Vec<FieldElement>,
    xs: Vec<FieldElement>,
    ys: Vec<FieldElement>,
    coeffs: Vec<FieldElement>,
}

impl Interpolator {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            master: Vec::with_capacity(k + 1),
            quotient: alloc::vec![FieldElement::ZERO; k],
            xs: Vec::with_capacity(k),
            ys: Vec::with_capacity(k),
            coeffs: alloc::vec![FieldElement::ZERO; k],
        }
    }

    pub fn degree_bound(&self) -> usize {
        self.k
    }

    /// Interpolates into the internal buffer; read it with [`Self::coefficients`].
    pub fn interpolate<I>(&mut self, points: I) -> Result<()>
    where
        I: IntoIterator<Item = VaultPoint>,
    {
        self.xs.clear();
        self.ys.clear();
        for p in points {
            self.xs.push(p.x);
            self.ys.push(p.y);
        }
        let k = self.k;
        if self.xs.len() != k {
            return Err(Error::WrongPointCount {
                expected: k,
                got: self.xs.len(),
            });
        }
        // master = prod (X - x_i), lowest degree first
        self.master.clear();
        self.master.push(FieldElement::ONE);
        for &x in &self.xs {
            self.master.push(FieldElement::ZERO);
            for j in (1..self.master.len()).rev() {
                let lower = self.master[j - 1];
                self.master[j] = lower + self.master[j] * x;
            }
            self.master[0] = self.master[0] * x;
        }
        self.coeffs.iter_mut().for_each(|c| *c = FieldElement::ZERO);
        for i in 0..k {
            let xi = self.xs[i];
            // synthetic division master / (X - xi)
            let mut carry = FieldElement::ZERO;
            for j in (0..k).rev() {
                carry = self.master[j + 1] + carry * xi;
                self.quotient[j] = carry;
            }
            let denom = self
                .quotient
                .iter()
                .rev()
                .fold(FieldElement::ZERO, |acc, &c| acc * xi + c);
            let scale = self.ys[i] * denom.inv().map_err(|_| Error::DuplicateAbscissa)?;
            if scale.is_zero() {
                continue;
            }
            for (c, &q) in self.coeffs.iter_mut().zip(&self.quotient) {
                *c += scale * q;
            }
        }
        Ok(())
    }

    pub fn coefficients(&self) -> &[FieldElement] {
        &self.coeffs
    }

    pub fn digest(&self) -> SecretDigest {
        digest_coefficients(&self.coeffs)
    }

    pub fn to_polynomial(&self) -> Polynomial {
        Polynomial {
            coeffs: self.coeffs.clone(),
        }
    }
}
