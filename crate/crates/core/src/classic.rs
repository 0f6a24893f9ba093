//! The minutiae fuzzy vault: genuine minutiae hidden among well-separated
//! chaff minutiae, one vault point per vault minutia, and an exhaustive
//! hash-checked decoder.

use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::{FieldElement, Interpolator, Polynomial, SecretDigest, VaultPoint};
use crate::minutiae::{
    dissimilarity, select_well_separated, select_well_separated_indices, wrap_degrees, Minutia, MinutiaeTemplate, SpatialIndex,
    MAX_CONSECUTIVE_REJECTIONS, SEPARATION_THRESHOLD,
};

/// Fixed-point resolution of published minutiae: 1/100 pixel and 1/100 degree.
pub const FIXED_POINT_SCALE: f64 = 100.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassicVaultParams {
    /// Vault size.
    pub n: usize,
    pub t_min: usize,
    pub t_max: usize,
    /// Degree bound of the secret polynomial.
    pub k: usize,
    pub separation_threshold: f64,
    /// Radius within which a query minutia claims a vault minutia.
    pub match_threshold: f64,
}

impl ClassicVaultParams {
    /// Vault of size 224 hiding 18 to 24 genuine minutiae.
    pub fn reference(k: usize) -> Self {
        Self {
            n: 224,
            t_min: 18,
            t_max: 24,
            k,
            separation_threshold: SEPARATION_THRESHOLD,
            match_threshold: SEPARATION_THRESHOLD,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1"));
        }
        if !(self.t_min <= self.t_max && self.t_max <= self.n && self.n <= crate::field::ORDER) {
            return Err(Error::InvalidParameter("need t_min <= t_max <= n <= 65536"));
        }
        if self.k > self.t_min {
            return Err(Error::InvalidParameter("need k <= t_min"));
        }
        if !(self.separation_threshold > 0.0) || !(self.match_threshold >= 0.0) {
            return Err(Error::InvalidParameter("thresholds must be positive"));
        }
        Ok(())
    }
}

/// Published record: vault points, vault minutiae (index-aligned) and `h(f)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassicVault {
    pub params: ClassicVaultParams,
    /// Lexicographically sorted by `(a, b, theta)`; quality is not published.
    pub minutiae: Vec<Minutia>,
    /// `points[i]` encodes `minutiae[i]`; `points[i].x` is the field label of `i`.
    pub points: Vec<VaultPoint>,
    pub digest: SecretDigest,
    pub width: u32,
    pub height: u32,
}

/// Rounds a minutia onto the published fixed-point grid.
pub fn to_fixed_point(m: &Minutia) -> Minutia {
    let q = |v: f64| libm::round(v * FIXED_POINT_SCALE) / FIXED_POINT_SCALE;
    Minutia {
        a: q(m.a),
        b: q(m.b),
        theta: wrap_degrees(q(m.theta)),
        quality: m.quality,
    }
}

fn lexicographic(x: &Minutia, y: &Minutia) -> Ordering {
    x.a.total_cmp(&y.a)
        .then(x.b.total_cmp(&y.b))
        .then(x.theta.total_cmp(&y.theta))
}

/// Uniform ordinate different from `avoid`.
pub(crate) fn chaff_ordinate<R: Rng + ?Sized>(rng: &mut R, avoid: FieldElement) -> FieldElement {
    loop {
        let y = FieldElement::random(rng);
        if y != avoid {
            return y;
        }
    }
}

/// Protects `template` under `secret`. Deterministic for a fixed `seed`.
pub fn enroll(
    template: &MinutiaeTemplate,
    params: &ClassicVaultParams,
    secret: &Polynomial,
    seed: u64,
) -> Result<ClassicVault> {
    params.validate()?;
    if secret.degree_bound() != params.k {
        return Err(Error::InvalidParameter("secret degree bound differs from k"));
    }
    let canonical = MinutiaeTemplate::new(
        template.minutiae().iter().map(to_fixed_point).collect(),
        template.width,
        template.height,
    );
    let genuine = select_well_separated(
        &canonical,
        params.t_min,
        params.t_max,
        params.separation_threshold,
    )?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (template.width as f64, template.height as f64);
    let sep = params.separation_threshold;
    let mut index = SpatialIndex::new(w, h, sep);
    let mut all: Vec<(Minutia, bool)> = Vec::with_capacity(params.n);
    for m in &genuine {
        index.insert(m.a, m.b, all.len());
        all.push((Minutia { quality: 0.0, ..*m }, true));
    }
    let (wi, hi) = (template.width as i64 * 100, template.height as i64 * 100);
    let mut rejected = 0;
    while all.len() < params.n {
        if wi <= 0 || hi <= 0 {
            return Err(Error::ChaffPlacement {
                missing: params.n - all.len(),
            });
        }
        let c = Minutia {
            a: rng.gen_range(0..wi) as f64 / FIXED_POINT_SCALE,
            b: rng.gen_range(0..hi) as f64 / FIXED_POINT_SCALE,
            theta: rng.gen_range(0..36_000) as f64 / FIXED_POINT_SCALE,
            quality: 0.0,
        };
        if index
            .candidates(c.a, c.b, sep)
            .all(|i| dissimilarity(&all[i].0, &c) > sep)
        {
            index.insert(c.a, c.b, all.len());
            all.push((c, false));
            rejected = 0;
        } else {
            rejected += 1;
            if rejected >= MAX_CONSECUTIVE_REJECTIONS {
                return Err(Error::ChaffPlacement {
                    missing: params.n - all.len(),
                });
            }
        }
    }
    all.sort_by(|x, y| lexicographic(&x.0, &y.0));

    let mut points = Vec::with_capacity(params.n);
    let mut minutiae = Vec::with_capacity(params.n);
    for (i, (m, is_genuine)) in all.into_iter().enumerate() {
        let x = FieldElement::new(i as u16);
        let fx = secret.eval(x);
        let y = if is_genuine {
            fx
        } else {
            chaff_ordinate(&mut rng, fx)
        };
        points.push(VaultPoint::new(x, y));
        minutiae.push(m);
    }
    Ok(ClassicVault {
        params: *params,
        minutiae,
        points,
        digest: secret.digest(),
        width: template.width,
        height: template.height,
    })
}

/// Vault points claimed by a query.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnlockingSet {
    pub points: Vec<VaultPoint>,
    /// Genuine points in the set; only known to analyses holding the secret.
    pub genuine_count: Option<usize>,
}

impl UnlockingSet {
    pub fn new(points: Vec<VaultPoint>) -> Self {
        Self {
            points,
            genuine_count: None,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Records how many points lie on `secret`.
    pub fn with_ground_truth(mut self, secret: &Polynomial) -> Self {
        self.genuine_count = Some(
            self.points
                .iter()
                .filter(|p| secret.eval(p.x) == p.y)
                .count(),
        );
        self
    }
}

/// Indices of the vault minutiae claimed by an aligned query, in query
/// quality order. Each vault minutia is claimed at most once.
pub fn claim_vault_minutiae(vault: &ClassicVault, query: &MinutiaeTemplate) -> Vec<usize> {
    claim_pairs(&vault.minutiae, &vault.params, query)
        .into_iter()
        .map(|(v, _)| v)
        .collect()
}

/// `(vault index, query index)` pairs behind [`claim_vault_minutiae`]; the
/// query index points into `query.minutiae()`.
pub fn claim_pairs(
    vault_minutiae: &[Minutia],
    params: &ClassicVaultParams,
    query: &MinutiaeTemplate,
) -> Vec<(usize, usize)> {
    let selected =
        match select_well_separated_indices(query, 0, params.t_max, params.separation_threshold) {
            Ok(s) => s,
            Err(_) => return Vec::new(),
        };
    let mut claimed = alloc::vec![false; vault_minutiae.len()];
    let mut out = Vec::new();
    for qi in selected {
        let q = &query.minutiae()[qi];
        let best = vault_minutiae
            .iter()
            .enumerate()
            .map(|(i, v)| (i, dissimilarity(v, q)))
            .min_by(|x, y| x.1.total_cmp(&y.1));
        if let Some((i, d)) = best {
            if d <= params.match_threshold && !claimed[i] {
                claimed[i] = true;
                out.push((i, qi));
            }
        }
    }
    out
}

/// Unlocking set for a query already aligned to the vault frame.
pub fn build_unlocking_set(vault: &ClassicVault, query: &MinutiaeTemplate) -> UnlockingSet {
    UnlockingSet::new(
        claim_vault_minutiae(vault, query)
            .into_iter()
            .map(|i| vault.points[i])
            .collect(),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RejectReason {
    /// Fewer than `k` unlocking points.
    TooFewPoints,
    /// Every candidate was tried without a digest match.
    Exhausted,
    /// The iteration budget ran out first.
    BudgetExhausted,
}

/// Result of a hash-checked decoding run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Decoded {
    Recovered {
        secret: Polynomial,
        /// Candidate polynomials computed, including the accepting one.
        iterations: u64,
    },
    Rejected {
        reason: RejectReason,
        iterations: u64,
    },
}

impl Decoded {
    pub fn secret(&self) -> Option<&Polynomial> {
        match self {
            Decoded::Recovered { secret, .. } => Some(secret),
            Decoded::Rejected { .. } => None,
        }
    }

    pub fn iterations(&self) -> u64 {
        match self {
            Decoded::Recovered { iterations, .. } | Decoded::Rejected { iterations, .. } => *iterations,
        }
    }

    pub fn is_recovered(&self) -> bool {
        matches!(self, Decoded::Recovered { .. })
    }
}

/// Lexicographic walk over the `k`-subsets of `0..n`.
#[derive(Clone, Debug)]
pub struct Combinations {
    n: usize,
    idx: Vec<usize>,
    first: bool,
    done: bool,
}

impl Combinations {
    pub fn new(n: usize, k: usize) -> Self {
        Self {
            n,
            idx: (0..k).collect(),
            first: true,
            done: k > n,
        }
    }

    /// Advances to the next subset; returns it, or `None` when exhausted.
    pub fn next_subset(&mut self) -> Option<&[usize]> {
        if self.done {
            return None;
        }
        if self.first {
            self.first = false;
            return Some(&self.idx);
        }
        let k = self.idx.len();
        let mut i = k;
        while i > 0 {
            i -= 1;
            if self.idx[i] != i + self.n - k {
                self.idx[i] += 1;
                for j in i + 1..k {
                    self.idx[j] = self.idx[j - 1] + 1;
                }
                return Some(&self.idx);
            }
        }
        self.done = true;
        None
    }
}

/// Tries every `k`-subset of the unlocking set in lexicographic order over
/// the sorted abscissae and accepts the first interpolant whose digest
/// matches. `budget` caps the number of subsets tried.
pub fn decode_exhaustive(
    unlocking: &UnlockingSet,
    k: usize,
    digest: &SecretDigest,
    budget: Option<u64>,
) -> Decoded {
    let mut pts = unlocking.points.clone();
    pts.sort_by_key(|p| p.x);
    if k == 0 || pts.len() < k {
        return Decoded::Rejected {
            reason: RejectReason::TooFewPoints,
            iterations: 0,
        };
    }
    let mut interp = Interpolator::new(k);
    let mut combos = Combinations::new(pts.len(), k);
    let mut iterations = 0u64;
    while let Some(subset) = combos.next_subset() {
        if budget.is_some_and(|b| iterations >= b) {
            return Decoded::Rejected {
                reason: RejectReason::BudgetExhausted,
                iterations,
            };
        }
        iterations += 1;
        if interp.interpolate(subset.iter().map(|&i| pts[i])).is_err() {
            continue;
        }
        if interp.digest() == *digest {
            return Decoded::Recovered {
                secret: interp.to_polynomial(),
                iterations,
            };
        }
    }
    Decoded::Rejected {
        reason: RejectReason::Exhausted,
        iterations,
    }
}

/// Indices of the `draw`-th uniformly random `k`-subset of `0..n` in the
/// stream keyed by `seed`. Each draw has its own generator, so any range of
/// draws can be replayed independently of the others.
pub fn random_subset(seed: u64, draw: u64, n: usize, k: usize, out: &mut Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(draw);
    out.clear();
    out.extend(rand::seq::index::sample(&mut rng, n, k).into_iter());
}

/// Hash-checked decoding over the draws in `draws`; returns the first
/// accepting draw and its polynomial. Requires `k <= points.len()`.
pub fn decode_draws(
    points: &[VaultPoint],
    k: usize,
    digest: &SecretDigest,
    seed: u64,
    draws: core::ops::Range<u64>,
) -> Option<(u64, Polynomial)> {
    if k == 0 || points.len() < k {
        return None;
    }
    let mut interp = Interpolator::new(k);
    let mut subset = Vec::with_capacity(k);
    for draw in draws {
        random_subset(seed, draw, points.len(), k, &mut subset);
        if interp.interpolate(subset.iter().map(|&i| points[i])).is_err() {
            continue;
        }
        if interp.digest() == *digest {
            return Some((draw, interp.to_polynomial()));
        }
    }
    None
}

/// Unlock attempt with an aligned query: unlocking set plus exhaustive decoding.
pub fn unlock(vault: &ClassicVault, query: &MinutiaeTemplate, budget: Option<u64>) -> Decoded {
    let u = build_unlocking_set(vault, query);
    decode_exhaustive(&u, vault.params.k, &vault.digest, budget)
}
