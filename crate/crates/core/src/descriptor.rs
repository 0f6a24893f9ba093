//! Descriptor-hardened vault: each vault ordinate is hidden in a fuzzy
//! commitment `c(y) ⊕ w` keyed by the minutia's binary descriptor `w`,
//! plus the analysis of how much such hardening adds.
//!
//! A 16-bit ordinate does not fit the 5- or 6-bit messages of the short
//! codes, so ordinates are split into `B = ceil(16 / ell)` chunks, each
//! committed under its own codeword and its own `m`-bit descriptor segment.
//! Descriptors are therefore `B * m` bits long; with BCH(511,19) `B = 1`.

use alloc::vec::Vec;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::{big_log2, binomial, log2_bf_security, ratio_to_f64};
use crate::bch::{BchCode, BinaryCodeSpec};
use crate::bits::BitString;
use crate::classic::{
    claim_pairs, decode_exhaustive, enroll, to_fixed_point, ClassicVault, ClassicVaultParams,
    Decoded, UnlockingSet,
};
use crate::error::{Error, Result};
use crate::field::{FieldElement, Polynomial, SecretDigest, VaultPoint};
use crate::minutiae::{Minutia, MinutiaeTemplate};

/// Difficulty of guessing a random minutia descriptor.
pub const DESCRIPTOR_GUESS_DIFFICULTY: f64 = 4.27;

/// Splits 16-bit ordinates into per-codeword chunks.
#[derive(Clone, Debug)]
pub struct OrdinateCodec {
    code: BchCode,
    /// Bits per chunk, most significant chunk first.
    chunks: Vec<usize>,
}

impl OrdinateCodec {
    pub fn new(spec: BinaryCodeSpec) -> Result<Self> {
        let code = BchCode::new(spec)?;
        let blocks = 16usize.div_ceil(spec.ell);
        let (base, extra) = (16 / blocks, 16 % blocks);
        let chunks = (0..blocks).map(|i| base + usize::from(i < extra)).collect();
        Ok(Self { code, chunks })
    }

    pub fn spec(&self) -> &BinaryCodeSpec {
        self.code.spec()
    }

    pub fn code(&self) -> &BchCode {
        &self.code
    }

    /// Number of codewords per ordinate.
    pub fn blocks(&self) -> usize {
        self.chunks.len()
    }

    pub fn chunk_bits(&self) -> &[usize] {
        &self.chunks
    }

    /// Descriptor (and masked word) length in bits.
    pub fn word_bits(&self) -> usize {
        self.blocks() * self.spec().m
    }

    fn split(&self, y: FieldElement) -> impl Iterator<Item = u32> + '_ {
        let mut rest = 16;
        self.chunks.iter().map(move |&c| {
            rest -= c;
            (u32::from(y.value()) >> rest) & ((1 << c) - 1)
        })
    }

    /// Concatenated codewords of the ordinate's chunks.
    pub fn encode(&self, y: FieldElement) -> BitString {
        let words: Vec<BitString> = self
            .split(y)
            .map(|chunk| self.code.encode(chunk).expect("chunk fits the message length"))
            .collect();
        BitString::concat(&words)
    }

    /// Per-segment bounded-distance decoding; `None` unless every segment
    /// decodes to a message that fits its chunk.
    pub fn decode(&self, word: &BitString) -> Option<FieldElement> {
        self.decode_segments(word).1
    }

    /// Decoding outcome of each segment together with the assembled ordinate.
    pub fn decode_segments(&self, word: &BitString) -> (Vec<Option<u32>>, Option<FieldElement>) {
        let m = self.spec().m;
        let segments: Vec<Option<u32>> = (0..self.blocks())
            .map(|b| self.code.decode(&word.slice(b * m, m)).ok().flatten())
            .collect();
        let mut y = 0u32;
        for (msg, &c) in segments.iter().zip(&self.chunks) {
            match msg {
                Some(v) if *v < (1 << c) => y = (y << c) | v,
                _ => return (segments, None),
            }
        }
        (segments, Some(FieldElement::new(y as u16)))
    }
}

/// Binary descriptor of one minutia.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Descriptor {
    pub bits: BitString,
}

impl Descriptor {
    pub fn new(bits: BitString) -> Self {
        Self { bits }
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Self {
        Self::new(BitString::random(rng, len))
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Copy with `count` distinct random bits flipped.
    pub fn perturbed<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Self {
        let mut bits = self.bits.clone();
        for i in rand::seq::index::sample(rng, bits.len(), count.min(bits.len())) {
            bits.flip(i);
        }
        Self::new(bits)
    }
}

/// A template whose minutiae carry descriptors, kept index-aligned through
/// the quality ordering.
#[derive(Clone, Debug, PartialEq)]
pub struct DescribedTemplate {
    pub template: MinutiaeTemplate,
    /// `descriptors[i]` belongs to `template.minutiae()[i]`.
    pub descriptors: Vec<Descriptor>,
}

impl DescribedTemplate {
    pub fn new(pairs: Vec<(Minutia, Descriptor)>, width: u32, height: u32) -> Self {
        let mut pairs = pairs;
        pairs.sort_by(|x, y| {
            y.0.quality
                .partial_cmp(&x.0.quality)
                .unwrap_or(core::cmp::Ordering::Equal)
        });
        let (minutiae, descriptors): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        Self {
            template: MinutiaeTemplate::new(minutiae, width, height),
            descriptors,
        }
    }

    /// Attaches uniformly random descriptors of `len` bits.
    pub fn with_random_descriptors(template: &MinutiaeTemplate, len: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            template: template.clone(),
            descriptors: (0..template.len())
                .map(|_| Descriptor::random(&mut rng, len))
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaskedEntry {
    pub x: FieldElement,
    pub masked: BitString,
}

/// Published record: vault minutiae and masked ordinates, no plain ordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct DescriptorVault {
    pub params: ClassicVaultParams,
    pub code: BinaryCodeSpec,
    pub minutiae: Vec<Minutia>,
    pub entries: Vec<MaskedEntry>,
    pub digest: SecretDigest,
    pub width: u32,
    pub height: u32,
}

impl DescriptorVault {
    pub fn codec(&self) -> Result<OrdinateCodec> {
        OrdinateCodec::new(self.code)
    }
}

/// Masks every ordinate of `vault`. `genuine` lists `(vault index,
/// descriptor)` for the genuine entries; the remaining entries are masked
/// with descriptors drawn from `chaff_pool`, or with fresh uniform
/// descriptors when the pool is empty.
pub fn harden_vault(
    vault: &ClassicVault,
    genuine: &[(usize, Descriptor)],
    chaff_pool: &[Descriptor],
    code: BinaryCodeSpec,
    seed: u64,
) -> Result<DescriptorVault> {
    let codec = OrdinateCodec::new(code)?;
    let len = codec.word_bits();
    for d in genuine.iter().map(|g| &g.1).chain(chaff_pool) {
        if d.len() != len {
            return Err(Error::DimensionMismatch {
                expected: len,
                got: d.len(),
            });
        }
    }
    let n = vault.points.len();
    let mut keys: Vec<Option<&Descriptor>> = alloc::vec![None; n];
    for (i, d) in genuine {
        match keys.get_mut(*i) {
            Some(slot) => *slot = Some(d),
            None => return Err(Error::InvalidParameter("genuine index outside the vault")),
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let entries = vault
        .points
        .iter()
        .zip(keys)
        .map(|(p, key)| {
            let w = match key {
                Some(d) => d.bits.clone(),
                None if chaff_pool.is_empty() => BitString::random(&mut rng, len),
                None => chaff_pool[rng.gen_range(0..chaff_pool.len())].bits.clone(),
            };
            let mut masked = codec.encode(p.y);
            masked ^= &w;
            MaskedEntry { x: p.x, masked }
        })
        .collect();
    Ok(DescriptorVault {
        params: vault.params,
        code,
        minutiae: vault.minutiae.clone(),
        entries,
        digest: vault.digest,
        width: vault.width,
        height: vault.height,
    })
}

/// Enrolls a described template: classic enrollment, then every genuine
/// vault entry is masked with the descriptor of the minutia it came from.
pub fn enroll_hardened(
    template: &DescribedTemplate,
    params: &ClassicVaultParams,
    secret: &Polynomial,
    code: BinaryCodeSpec,
    seed: u64,
) -> Result<DescriptorVault> {
    let len = OrdinateCodec::new(code)?.word_bits();
    if template.descriptors.len() != template.template.len() {
        return Err(Error::DimensionMismatch {
            expected: template.template.len(),
            got: template.descriptors.len(),
        });
    }
    let vault = enroll(&template.template, params, secret, seed)?;
    let mut genuine = Vec::new();
    for (m, d) in template.template.minutiae().iter().zip(&template.descriptors) {
        let c = to_fixed_point(m);
        let hit = vault
            .minutiae
            .iter()
            .position(|v| v.a == c.a && v.b == c.b && v.theta == c.theta);
        if let Some(i) = hit {
            let p = vault.points[i];
            if secret.eval(p.x) == p.y && genuine.iter().all(|(j, _)| *j != i) {
                genuine.push((i, d.clone()));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xD15C_0DE5);
    let pool: Vec<Descriptor> = (0..params.n)
        .map(|_| Descriptor::random(&mut rng, len))
        .collect();
    harden_vault(&vault, &genuine, &pool, code, seed.wrapping_add(1))
}

/// Unlocking set of an aligned described query: claimed entries whose
/// unmasked word decodes.
pub fn hardened_unlocking_set(vault: &DescriptorVault, query: &DescribedTemplate) -> Result<UnlockingSet> {
    let codec = vault.codec()?;
    let mut points = Vec::new();
    for (vi, qi) in claim_pairs(&vault.minutiae, &vault.params, &query.template) {
        let w = query.descriptors.get(qi).ok_or(Error::DimensionMismatch {
            expected: query.template.len(),
            got: query.descriptors.len(),
        })?;
        if w.len() != codec.word_bits() {
            return Err(Error::DimensionMismatch {
                expected: codec.word_bits(),
                got: w.len(),
            });
        }
        let entry = &vault.entries[vi];
        let word = &entry.masked ^ &w.bits;
        if let Some(y) = codec.decode(&word) {
            points.push(VaultPoint::new(entry.x, y));
        }
    }
    Ok(UnlockingSet::new(points))
}

pub fn unlock_hardened(
    vault: &DescriptorVault,
    query: &DescribedTemplate,
    budget: Option<u64>,
) -> Result<Decoded> {
    let u = hardened_unlocking_set(vault, query)?;
    Ok(decode_exhaustive(&u, vault.params.k, &vault.digest, budget))
}

/// Probability that a uniform word decodes: `2^(ell - m) * sum_{j<=nu} C(m, j)`.
pub fn sphere_packing_density(code: &BinaryCodeSpec) -> f64 {
    let covered = ball_volume(code) << code.ell;
    ratio_to_f64(&covered, &(BigUint::one() << code.m))
}

pub fn log2_sphere_packing_density(code: &BinaryCodeSpec) -> f64 {
    big_log2(&ball_volume(code)) + code.ell as f64 - code.m as f64
}

/// Words within distance `nu` of a codeword: `sum_{j<=nu} C(m, j)`.
fn ball_volume(code: &BinaryCodeSpec) -> BigUint {
    (0..=code.nu as u64).fold(BigUint::zero(), |acc, j| acc + binomial(code.m as u64, j))
}

/// `S = 1 + (R - 1) * rho`.
pub fn descriptor_factor(r: f64, rho: f64) -> f64 {
    1.0 + (r - 1.0) * rho
}

/// `log2(S^k * bf(n, t, k))` for an explicit density.
pub fn log2_hardened_bf_security_with_density(n: u64, t: u64, k: u64, r: f64, rho: f64) -> Result<f64> {
    if !(r >= 1.0) {
        return Err(Error::InvalidParameter("guessing difficulty must be at least 1"));
    }
    Ok(k as f64 * libm::log2(descriptor_factor(r, rho)) + log2_bf_security(n, t, k)?)
}

pub fn log2_hardened_bf_security(n: u64, t: u64, k: u64, r: f64, code: &BinaryCodeSpec) -> Result<f64> {
    log2_hardened_bf_security_with_density(n, t, k, r, sphere_packing_density(code))
}

/// `S^k * bf(n, t, k)`: brute-force security when every guessed point also
/// needs a guessed descriptor.
pub fn hardened_bf_security(n: u64, t: u64, k: u64, r: f64, code: &BinaryCodeSpec) -> Result<f64> {
    Ok(libm::exp2(log2_hardened_bf_security(n, t, k, r, code)?))
}

/// Chance that descriptor guessing yields no wrong candidate for any of
/// `n` entries, `(1 - S')^n` with `S' = (R - 1) * rho`, together with its
/// complement (which stays representable when the former rounds to 1).
pub fn decoupling_success(n: u64, r: f64, rho: f64) -> (f64, f64) {
    let log = n as f64 * libm::log1p(-(r - 1.0) * rho);
    (libm::exp(log), -libm::expm1(log))
}

/// Per-entry outcome of trying every pool descriptor against a masked entry.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EntryCandidates {
    /// Decoded ordinates, one per successful pool descriptor (repeats kept).
    pub ordinates: Vec<FieldElement>,
    /// Successful decodes per codeword segment.
    pub segment_hits: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecouplingReport {
    pub entries: Vec<EntryCandidates>,
    pub pool_size: usize,
    /// Mean successful decodes per segment over all entries and segments.
    pub mean_segment_candidates: f64,
    /// Mean number of candidate ordinates per entry.
    pub mean_entry_candidates: f64,
    /// `1 + (pool - 1) * rho` per segment.
    pub expected_segment_candidates: f64,
    pub density: f64,
}

/// Unmasks every entry with every pool descriptor and collects the
/// ordinates that decode.
pub fn decouple_ordinates(vault: &DescriptorVault, pool: &[Descriptor]) -> Result<DecouplingReport> {
    if pool.is_empty() {
        return Err(Error::Empty("descriptor pool"));
    }
    let codec = vault.codec()?;
    if let Some(d) = pool.iter().find(|d| d.len() != codec.word_bits()) {
        return Err(Error::DimensionMismatch {
            expected: codec.word_bits(),
            got: d.len(),
        });
    }
    let mut entries = Vec::with_capacity(vault.entries.len());
    let (mut seg_total, mut entry_total) = (0usize, 0usize);
    for e in &vault.entries {
        let mut c = EntryCandidates {
            ordinates: Vec::new(),
            segment_hits: alloc::vec![0; codec.blocks()],
        };
        for d in pool {
            let (segments, y) = codec.decode_segments(&(&e.masked ^ &d.bits));
            for (hits, s) in c.segment_hits.iter_mut().zip(&segments) {
                *hits += usize::from(s.is_some());
            }
            if let Some(y) = y {
                c.ordinates.push(y);
            }
        }
        seg_total += c.segment_hits.iter().sum::<usize>();
        entry_total += c.ordinates.len();
        entries.push(c);
    }
    let n = vault.entries.len().max(1) as f64;
    let density = sphere_packing_density(&vault.code);
    Ok(DecouplingReport {
        pool_size: pool.len(),
        mean_segment_candidates: seg_total as f64 / (n * codec.blocks() as f64),
        mean_entry_candidates: entry_total as f64 / n,
        expected_segment_candidates: 1.0 + (pool.len() as f64 - 1.0) * density,
        density,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minutiae::synthesize_finger;

    /// log2 brute-force security of (224, 24, k) with descriptors, per code.
    const HARDENED_LOG2: [(BinaryCodeSpec, [(u64, f64); 6]); 3] = [
        (
            BinaryCodeSpec::BCH_511_19,
            [(7, 24.0), (8, 27.0), (9, 31.0), (10, 35.0), (11, 39.0), (12, 43.0)],
        ),
        (
            BinaryCodeSpec::BCH_31_6,
            [(7, 27.0), (8, 31.0), (9, 35.0), (10, 39.0), (11, 44.0), (12, 48.0)],
        ),
        (
            BinaryCodeSpec::BCH_15_5,
            [(7, 34.0), (8, 40.0), (9, 45.0), (10, 50.0), (11, 56.0), (12, 61.0)],
        ),
    ];

    #[test]
    fn codec_layout() {
        let blocks: Vec<_> = BinaryCodeSpec::ALL
            .iter()
            .map(|&c| OrdinateCodec::new(c).unwrap().chunk_bits().to_vec())
            .collect();
        assert_eq!(blocks, [alloc::vec![16], alloc::vec![6, 5, 5], alloc::vec![4, 4, 4, 4]]);
        for spec in BinaryCodeSpec::ALL {
            let codec = OrdinateCodec::new(spec).unwrap();
            for y in [0u16, 1, 0x1234, 0xffff] {
                let y = FieldElement::new(y);
                assert_eq!(codec.decode(&codec.encode(y)), Some(y));
            }
        }
    }

    #[test]
    fn densities() {
        assert_eq!(sphere_packing_density(&BinaryCodeSpec::BCH_15_5), 0.5625);
        let rho = sphere_packing_density(&BinaryCodeSpec::BCH_511_19);
        assert!(rho / 1.3e-29 < 1.15 && 1.3e-29 / rho < 1.15, "{rho}");
        let perfect = BinaryCodeSpec {
            m: 7,
            ell: 7,
            nu: 0,
            ..BinaryCodeSpec::BCH_15_5
        };
        assert_eq!(sphere_packing_density(&perfect), 1.0);
    }

    #[test]
    fn density_monotone_in_radius_and_dimension() {
        let base = BinaryCodeSpec::BCH_31_6;
        let mut prev = 0.0;
        for nu in 0..10 {
            let d = sphere_packing_density(&BinaryCodeSpec { nu, ..base });
            assert!(d > prev);
            prev = d;
        }
        let mut prev = 0.0;
        for ell in 1..20 {
            let d = sphere_packing_density(&BinaryCodeSpec { ell, ..base });
            assert!(d > prev);
            prev = d;
        }
    }

    #[test]
    fn hardened_security_values() {
        let v = hardened_bf_security(224, 24, 9, DESCRIPTOR_GUESS_DIFFICULTY, &BinaryCodeSpec::BCH_511_19)
            .unwrap();
        assert!((v / 2.54e9 - 1.0).abs() < 0.01, "{v}");
        for (code, row) in HARDENED_LOG2 {
            for (k, expected) in row {
                let got = log2_hardened_bf_security(224, 24, k, DESCRIPTOR_GUESS_DIFFICULTY, &code).unwrap();
                assert!((got - expected).abs() <= 0.5, "{code:?} k={k}: {got}");
            }
        }
        let bf = log2_bf_security(224, 24, 9).unwrap();
        assert_eq!(log2_hardened_bf_security_with_density(224, 24, 9, 4.27, 0.0).unwrap(), bf);
        let mut prev = bf;
        for rho in [0.01, 0.1, 0.5, 1.0] {
            let v = log2_hardened_bf_security_with_density(224, 24, 9, 4.27, rho).unwrap();
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn decoupling_estimate() {
        let (ok, fail) = decoupling_success(224, 1.0 + 4.25e-29 / 1.3e-29, 1.3e-29);
        assert_eq!(ok, 1.0);
        assert!((fail / 9.52e-27 - 1.0).abs() < 0.001, "{fail}");
    }

    #[test]
    fn unmasking_decodes_iff_within_radius() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for spec in BinaryCodeSpec::ALL {
            let codec = OrdinateCodec::new(spec).unwrap();
            let code = codec.code();
            for _ in 0..200 {
                let y = rng.gen_range(0..1u32 << spec.ell.min(16));
                let w = BitString::random(&mut rng, spec.m);
                let masked = &code.encode(y).unwrap() ^ &w;
                let flips = rng.gen_range(0..=spec.nu + 3);
                let w2 = Descriptor::new(w.clone()).perturbed(&mut rng, flips).bits;
                let got = code.decode(&(&masked ^ &w2)).unwrap();
                if (&w ^ &w2).weight() <= spec.nu {
                    assert_eq!(got, Some(y));
                } else {
                    assert_ne!(got, Some(y));
                }
            }
        }
    }

    #[test]
    fn random_descriptors_never_open_long_code() {
        let codec = OrdinateCodec::new(BinaryCodeSpec::BCH_511_19).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let masked = &codec.encode(FieldElement::new(777)) ^ &BitString::random(&mut rng, 511);
        let opened = (0..20_000)
            .filter(|_| codec.decode(&(&masked ^ &BitString::random(&mut rng, 511))).is_some())
            .count();
        assert_eq!(opened, 0);
    }

    fn described(seed: u64, spec: BinaryCodeSpec) -> (DescribedTemplate, Polynomial, DescriptorVault) {
        let f = synthesize_finger(seed, 30, 296, 560, 30.0).unwrap();
        let len = OrdinateCodec::new(spec).unwrap().word_bits();
        let t = DescribedTemplate::with_random_descriptors(&f, len, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let secret = Polynomial::random(&mut rng, 9).unwrap();
        let v = enroll_hardened(&t, &ClassicVaultParams::reference(9), &secret, spec, seed).unwrap();
        (t, secret, v)
    }

    #[test]
    fn hardened_self_unlock_and_no_plain_ordinates() {
        for spec in BinaryCodeSpec::ALL {
            let (t, secret, v) = described(1, spec);
            assert_eq!(v.entries.len(), 224);
            let got = unlock_hardened(&v, &t, None).unwrap();
            assert_eq!(got.secret(), Some(&secret), "{spec:?}");
            // the genuine entries open with their own descriptors
            let u = hardened_unlocking_set(&v, &t).unwrap().with_ground_truth(&secret);
            assert_eq!(u.genuine_count, Some(u.len()));
            assert!(u.len() >= 18);
        }
    }

    #[test]
    fn descriptor_noise_within_and_beyond_radius() {
        let spec = BinaryCodeSpec::BCH_31_6;
        let (t, secret, v) = described(2, spec);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let blocks = OrdinateCodec::new(spec).unwrap().blocks();
        let perturb = |rng: &mut ChaCha8Rng, flips: usize| {
            let descriptors = t
                .descriptors
                .iter()
                .map(|d| {
                    // the same number of flips in every segment
                    let mut bits = d.bits.clone();
                    for b in 0..blocks {
                        for i in rand::seq::index::sample(rng, spec.m, flips) {
                            bits.flip(b * spec.m + i);
                        }
                    }
                    Descriptor::new(bits)
                })
                .collect();
            DescribedTemplate {
                template: t.template.clone(),
                descriptors,
            }
        };
        let near = perturb(&mut rng, spec.nu);
        assert_eq!(unlock_hardened(&v, &near, None).unwrap().secret(), Some(&secret));
        // minimum distance 2nu+1: beyond nu + (nu + 1) flips per segment a
        // segment can still land in another ball, but never its own
        let far = perturb(&mut rng, 2 * spec.nu + 2);
        let u = hardened_unlocking_set(&v, &far).unwrap().with_ground_truth(&secret);
        assert_eq!(u.genuine_count, Some(0));
        assert!(!unlock_hardened(&v, &far, Some(100_000)).unwrap().is_recovered());
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let f = synthesize_finger(4, 30, 296, 560, 30.0).unwrap();
        let t = DescribedTemplate::with_random_descriptors(&f, 100, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let secret = Polynomial::random(&mut rng, 9).unwrap();
        let err = enroll_hardened(&t, &ClassicVaultParams::reference(9), &secret, BinaryCodeSpec::BCH_511_19, 4);
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn decoupling_candidate_counts() {
        let spec = BinaryCodeSpec::BCH_15_5;
        let len = OrdinateCodec::new(spec).unwrap().word_bits();
        let mut means = Vec::new();
        for seed in 0..5u64 {
            let f = synthesize_finger(seed, 30, 296, 560, 30.0).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pool: Vec<_> = (0..1000).map(|_| Descriptor::random(&mut rng, len)).collect();
            let secret = Polynomial::random(&mut rng, 9).unwrap();
            let params = ClassicVaultParams {
                n: 60,
                ..ClassicVaultParams::reference(9)
            };
            let v = enroll(&f, &params, &secret, seed).unwrap();
            // genuine entries keyed by pool members 0.., chaff drawn from the pool
            let genuine: Vec<_> = v
                .points
                .iter()
                .enumerate()
                .filter(|(_, p)| secret.eval(p.x) == p.y)
                .enumerate()
                .map(|(j, (i, _))| (i, pool[j].clone()))
                .collect();
            let h = harden_vault(&v, &genuine, &pool, spec, seed).unwrap();
            let report = decouple_ordinates(&h, &pool).unwrap();
            means.push(report.mean_segment_candidates / report.expected_segment_candidates);
            // each genuine entry's true ordinate is among its candidates
            for (i, _) in &genuine {
                assert!(report.entries[*i].ordinates.contains(&v.points[*i].y));
            }
        }
        let mean = means.iter().sum::<f64>() / means.len() as f64;
        assert!((mean - 1.0).abs() < 0.10, "{means:?}");
    }

    #[test]
    fn true_descriptors_recover_every_ordinate() {
        let (t, _, v) = described(6, BinaryCodeSpec::BCH_511_19);
        let report = decouple_ordinates(&v, &t.descriptors).unwrap();
        let opened = v
            .entries
            .iter()
            .zip(&report.entries)
            .filter(|(_, c)| !c.ordinates.is_empty())
            .count();
        assert!(opened >= 18);
    }
}
