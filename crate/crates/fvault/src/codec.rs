//! Versioned binary encodings of the three record types.
//!
//! Every record starts with a 4-byte magic and a version byte; integers and
//! floats are big-endian. Minutia quality is not part of a published record
//! and decodes as 0.

use fvault_core::bch::BinaryCodeSpec;
use fvault_core::bits::BitString;
use fvault_core::classic::{ClassicVault, ClassicVaultParams};
use fvault_core::descriptor::{DescriptorVault, MaskedEntry};
use fvault_core::field::{FieldElement, SecretDigest, VaultPoint};
use fvault_core::grid::{GridParams, GridVault};
use fvault_core::minutiae::Minutia;

pub const CLASSIC_MAGIC: &[u8; 4] = b"FVCL";
pub const DESCRIPTOR_MAGIC: &[u8; 4] = b"FVDV";
pub const GRID_MAGIC: &[u8; 4] = b"FVGR";
pub const VERSION: u8 = 1;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CodecError {
    #[error("unknown record magic {0:?}")]
    Magic([u8; 4]),
    #[error("unsupported record version {0}")]
    Version(u8),
    #[error("record truncated")]
    Truncated,
    #[error("{0} trailing bytes after record")]
    Trailing(usize),
    #[error("invalid record: {0}")]
    Invalid(&'static str),
}

pub type Result<T> = std::result::Result<T, CodecError>;

/// Any of the three records.
#[derive(Clone, Debug, PartialEq)]
pub enum Record {
    Classic(ClassicVault),
    Descriptor(DescriptorVault),
    Grid(GridVault),
}

impl Record {
    pub fn to_bytes(&self) -> Vec<u8> {
        match self {
            Record::Classic(v) => encode_classic(v),
            Record::Descriptor(v) => encode_descriptor(v),
            Record::Grid(v) => encode_grid(v),
        }
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let magic: [u8; 4] = bytes.get(..4).ok_or(CodecError::Truncated)?.try_into().unwrap();
        match &magic {
            CLASSIC_MAGIC => decode_classic(bytes).map(Record::Classic),
            DESCRIPTOR_MAGIC => decode_descriptor(bytes).map(Record::Descriptor),
            GRID_MAGIC => decode_grid(bytes).map(Record::Grid),
            _ => Err(CodecError::Magic(magic)),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Record::Classic(_) => "classic",
            Record::Descriptor(_) => "descriptor",
            Record::Grid(_) => "grid",
        }
    }
}

#[derive(Default)]
struct Writer(Vec<u8>);

impl Writer {
    fn header(magic: &[u8; 4]) -> Self {
        let mut w = Self::default();
        w.0.extend_from_slice(magic);
        w.0.push(VERSION);
        w
    }
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u16(&mut self, v: u16) {
        self.0.extend_from_slice(&v.to_be_bytes());
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_be_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_be_bytes());
    }
    fn digest(&mut self, d: &SecretDigest) {
        self.0.extend_from_slice(d.as_bytes());
    }
    fn minutia(&mut self, m: &Minutia) {
        self.f64(m.a);
        self.f64(m.b);
        self.f64(m.theta);
    }
    fn params(&mut self, p: &ClassicVaultParams, width: u32, height: u32) {
        for v in [p.n, p.t_min, p.t_max, p.k] {
            self.u32(v as u32);
        }
        self.f64(p.separation_threshold);
        self.f64(p.match_threshold);
        self.u32(width);
        self.u32(height);
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn open(bytes: &'a [u8], magic: &[u8; 4]) -> Result<Self> {
        let mut r = Self { bytes, pos: 0 };
        let m: [u8; 4] = r.take(4)?.try_into().unwrap();
        if &m != magic {
            return Err(CodecError::Magic(m));
        }
        let v = r.u8()?;
        if v != VERSION {
            return Err(CodecError::Version(v));
        }
        Ok(r)
    }
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).ok_or(CodecError::Truncated)?;
        let s = self.bytes.get(self.pos..end).ok_or(CodecError::Truncated)?;
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_be_bytes(self.take(2)?.try_into().unwrap()))
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_be_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn digest(&mut self) -> Result<SecretDigest> {
        Ok(SecretDigest(self.take(20)?.try_into().unwrap()))
    }
    fn minutia(&mut self) -> Result<Minutia> {
        let (a, b, theta) = (self.f64()?, self.f64()?, self.f64()?);
        if !(a.is_finite() && b.is_finite() && (0.0..360.0).contains(&theta)) {
            return Err(CodecError::Invalid("minutia out of range"));
        }
        Ok(Minutia {
            a,
            b,
            theta,
            quality: 0.0,
        })
    }
    fn params(&mut self) -> Result<(ClassicVaultParams, u32, u32)> {
        let n = self.u32()? as usize;
        let t_min = self.u32()? as usize;
        let t_max = self.u32()? as usize;
        let k = self.u32()? as usize;
        let p = ClassicVaultParams {
            n,
            t_min,
            t_max,
            k,
            separation_threshold: self.f64()?,
            match_threshold: self.f64()?,
        };
        p.validate().map_err(|_| CodecError::Invalid("vault parameters"))?;
        Ok((p, self.u32()?, self.u32()?))
    }
    /// Entry count, bounded by what the remaining bytes can hold.
    fn count(&mut self, entry_bytes: usize) -> Result<usize> {
        let n = self.u32()? as usize;
        if n.saturating_mul(entry_bytes) > self.bytes.len() - self.pos {
            return Err(CodecError::Truncated);
        }
        Ok(n)
    }
    fn finish(self) -> Result<()> {
        match self.bytes.len() - self.pos {
            0 => Ok(()),
            n => Err(CodecError::Trailing(n)),
        }
    }
}

pub fn encode_classic(v: &ClassicVault) -> Vec<u8> {
    let mut w = Writer::header(CLASSIC_MAGIC);
    w.params(&v.params, v.width, v.height);
    w.u32(v.points.len() as u32);
    for (m, p) in v.minutiae.iter().zip(&v.points) {
        w.minutia(m);
        w.u16(p.x.value());
        w.u16(p.y.value());
    }
    w.digest(&v.digest);
    w.0
}

pub fn decode_classic(bytes: &[u8]) -> Result<ClassicVault> {
    let mut r = Reader::open(bytes, CLASSIC_MAGIC)?;
    let (params, width, height) = r.params()?;
    let n = r.count(28)?;
    let mut minutiae = Vec::with_capacity(n);
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        minutiae.push(r.minutia()?);
        let x = FieldElement::new(r.u16()?);
        points.push(VaultPoint::new(x, FieldElement::new(r.u16()?)));
    }
    let digest = r.digest()?;
    r.finish()?;
    Ok(ClassicVault {
        params,
        minutiae,
        points,
        digest,
        width,
        height,
    })
}

fn pack_bits(b: &BitString) -> Vec<u8> {
    let mut out = vec![0u8; b.len().div_ceil(8)];
    for i in b.ones() {
        out[i / 8] |= 0x80 >> (i % 8);
    }
    out
}

fn unpack_bits(bytes: &[u8], len: usize) -> Result<BitString> {
    let mut b = BitString::zeros(len);
    for (i, byte) in bytes.iter().enumerate() {
        for j in 0..8 {
            if byte & (0x80 >> j) != 0 {
                let bit = i * 8 + j;
                if bit >= len {
                    return Err(CodecError::Invalid("nonzero padding bits"));
                }
                b.set(bit, true);
            }
        }
    }
    Ok(b)
}

/// The classic layout with each ordinate replaced by its masked codeword.
pub fn encode_descriptor(v: &DescriptorVault) -> Vec<u8> {
    let mut w = Writer::header(DESCRIPTOR_MAGIC);
    w.params(&v.params, v.width, v.height);
    w.u8(v.code.id());
    w.u32(v.entries.len() as u32);
    for (m, e) in v.minutiae.iter().zip(&v.entries) {
        w.minutia(m);
        w.u16(e.x.value());
        w.0.extend_from_slice(&pack_bits(&e.masked));
    }
    w.digest(&v.digest);
    w.0
}

pub fn decode_descriptor(bytes: &[u8]) -> Result<DescriptorVault> {
    let mut r = Reader::open(bytes, DESCRIPTOR_MAGIC)?;
    let (params, width, height) = r.params()?;
    let code = BinaryCodeSpec::from_id(r.u8()?).ok_or(CodecError::Invalid("unknown code id"))?;
    let v0 = DescriptorVault {
        params,
        code,
        minutiae: Vec::new(),
        entries: Vec::new(),
        digest: SecretDigest([0; 20]),
        width,
        height,
    };
    let bits = v0.codec().map_err(|_| CodecError::Invalid("code"))?.word_bits();
    let word_bytes = bits.div_ceil(8);
    let n = r.count(26 + word_bytes)?;
    let mut minutiae = Vec::with_capacity(n);
    let mut entries = Vec::with_capacity(n);
    for _ in 0..n {
        minutiae.push(r.minutia()?);
        let x = FieldElement::new(r.u16()?);
        let masked = unpack_bits(r.take(word_bytes)?, bits)?;
        entries.push(MaskedEntry { x, masked });
    }
    let digest = r.digest()?;
    r.finish()?;
    Ok(DescriptorVault {
        minutiae,
        entries,
        digest,
        ..v0
    })
}

/// Header `(lambda, s, width, height, k, tMax)`, then the ordinates in label
/// order (abscissae are implicit), then the digest.
pub fn encode_grid(v: &GridVault) -> Vec<u8> {
    let p = &v.params;
    let mut w = Writer::header(GRID_MAGIC);
    w.f64(p.lambda);
    w.u16(p.s as u16);
    w.u32(p.width);
    w.u32(p.height);
    w.u16(p.k as u16);
    w.u16(p.t_max as u16);
    w.u32(v.points.len() as u32);
    for y in v.ordinates() {
        w.u16(y.value());
    }
    w.digest(&v.digest);
    w.0
}

pub fn decode_grid(bytes: &[u8]) -> Result<GridVault> {
    let mut r = Reader::open(bytes, GRID_MAGIC)?;
    let lambda = r.f64()?;
    let s = r.u16()? as usize;
    let (width, height) = (r.u32()?, r.u32()?);
    let k = r.u16()? as usize;
    let t_max = r.u16()? as usize;
    let params = GridParams {
        lambda,
        s,
        width,
        height,
        t_max,
        k,
    };
    let n = r.count(2)?;
    let expected = params.vault_size().map_err(|_| CodecError::Invalid("grid parameters"))?;
    if n != expected {
        return Err(CodecError::Invalid("ordinate count differs from the grid size"));
    }
    let mut points = Vec::with_capacity(n);
    for i in 0..n {
        points.push(VaultPoint::new(FieldElement::new(i as u16), FieldElement::new(r.u16()?)));
    }
    let digest = r.digest()?;
    r.finish()?;
    Ok(GridVault {
        params,
        points,
        digest,
    })
}
