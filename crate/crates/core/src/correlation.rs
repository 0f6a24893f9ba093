//! Cross-matching of two records through their public vault minutiae.
//!
//! Genuine minutiae of the same finger tend to agree across records while
//! chaff does not. The search tries a coarse grid of rotations; for each,
//! translations are voted for by minutia pairs of compatible direction, and
//! the best-voted translations are scored by greedy pairing.

use alloc::vec::Vec;

use crate::classic::{decode_exhaustive, ClassicVault, Decoded, RejectReason, UnlockingSet};
use crate::minutiae::{angular_distance, dissimilarity, Minutia, RigidTransform, SpatialIndex};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorrelationConfig {
    /// Largest dissimilarity at which two minutiae pair up.
    pub pair_radius: f64,
    /// Rotations searched: `-max_rotation..=max_rotation` by `rotation_step`.
    pub max_rotation: f64,
    pub rotation_step: f64,
    /// Only pairs whose directions agree this closely (after rotation) vote.
    pub angle_tolerance: f64,
    /// Translation histogram bin width in pixels.
    pub bin_size: f64,
    /// Best-voted translations scored per rotation.
    pub candidates_per_rotation: usize,
    /// Records are declared to cross-match at this score or above.
    pub threshold: usize,
}

/// Score needed to declare two records linked under the default config.
pub const LINK_THRESHOLD: usize = 15;

impl CorrelationConfig {
    /// Pairing at the minutia-separation distance. At classic vault densities
    /// chaff coincidences dominate this score (around 100 pairs for unrelated
    /// fingers), so it hardly separates matching from non-matching records.
    pub fn loose() -> Self {
        Self {
            pair_radius: 25.0,
            threshold: 100,
            ..Self::default()
        }
    }
}

impl Default for CorrelationConfig {
    /// Tight pairing: identical genuine minutiae pair at distance ~0 while
    /// unrelated records only reach about 10 chance pairs.
    fn default() -> Self {
        Self {
            pair_radius: 6.0,
            max_rotation: 30.0,
            rotation_step: 3.0,
            angle_tolerance: 20.0,
            bin_size: 8.0,
            candidates_per_rotation: 3,
            threshold: LINK_THRESHOLD,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationResult {
    /// `(index in A, index in B)`, best agreement first.
    pub matched_pairs: Vec<(usize, usize)>,
    pub score: usize,
    /// Maps B's minutiae into A's frame.
    pub best_transform: RigidTransform,
    pub cross_match: bool,
}

/// Symmetric correlation score: the better of the two search directions.
pub fn correlation_score(a: &[Minutia], b: &[Minutia], cfg: &CorrelationConfig) -> CorrelationResult {
    let forward = directed_search(a, b, cfg);
    let backward = directed_search(b, a, cfg);
    let (pairs, transform) = if backward.0.len() > forward.0.len() {
        (
            backward.0.into_iter().map(|(i, j)| (j, i)).collect::<Vec<_>>(),
            backward.1.inverse(),
        )
    } else {
        forward
    };
    CorrelationResult {
        score: pairs.len(),
        cross_match: pairs.len() >= cfg.threshold,
        matched_pairs: pairs,
        best_transform: transform,
    }
}

fn rotations(cfg: &CorrelationConfig) -> Vec<f64> {
    // smallest rotations first so that ties keep the simplest alignment
    let steps = if cfg.rotation_step > 0.0 {
        libm::floor(cfg.max_rotation / cfg.rotation_step + 1e-9) as i64
    } else {
        0
    };
    let mut out = alloc::vec![0.0];
    for i in 1..=steps {
        out.push(-(i as f64) * cfg.rotation_step);
        out.push(i as f64 * cfg.rotation_step);
    }
    out
}

struct Extent {
    min: (f64, f64),
    max: (f64, f64),
}

fn extent<'a>(points: impl Iterator<Item = (f64, f64)> + 'a) -> Option<Extent> {
    let mut e: Option<Extent> = None;
    for (x, y) in points {
        let cur = e.get_or_insert(Extent {
            min: (x, y),
            max: (x, y),
        });
        cur.min = (cur.min.0.min(x), cur.min.1.min(y));
        cur.max = (cur.max.0.max(x), cur.max.1.max(y));
    }
    e
}

/// Best pairing of `b`, moved into `a`'s frame.
fn directed_search(
    a: &[Minutia],
    b: &[Minutia],
    cfg: &CorrelationConfig,
) -> (Vec<(usize, usize)>, RigidTransform) {
    let mut best: (Vec<(usize, usize)>, RigidTransform) = (Vec::new(), RigidTransform::IDENTITY);
    let Some(ea) = extent(a.iter().map(|m| (m.a, m.b))) else {
        return best;
    };
    if b.is_empty() {
        return best;
    }
    let index = Pairing::new(a, &ea, cfg.pair_radius);
    let bin = if cfg.bin_size > 0.0 { cfg.bin_size } else { 1.0 };
    for rot in rotations(cfg) {
        let turn = RigidTransform::new(0.0, 0.0, rot, (0.0, 0.0));
        let rb: Vec<Minutia> = b.iter().map(|m| turn.apply(m)).collect();
        let Some(eb) = extent(rb.iter().map(|m| (m.a, m.b))) else {
            continue;
        };
        let origin = (ea.min.0 - eb.max.0, ea.min.1 - eb.max.1);
        let cols = (libm::floor((ea.max.0 - eb.min.0 - origin.0) / bin) as usize) + 1;
        let rows = (libm::floor((ea.max.1 - eb.min.1 - origin.1) / bin) as usize) + 1;
        let mut votes = alloc::vec![(0u32, 0.0f64, 0.0f64); cols * rows];
        for ma in a {
            for mb in &rb {
                if angular_distance(ma.theta, mb.theta) > cfg.angle_tolerance {
                    continue;
                }
                let (tx, ty) = (ma.a - mb.a, ma.b - mb.b);
                let c = (libm::floor((tx - origin.0) / bin) as usize).min(cols - 1);
                let r = (libm::floor((ty - origin.1) / bin) as usize).min(rows - 1);
                let v = &mut votes[r * cols + c];
                v.0 += 1;
                v.1 += tx;
                v.2 += ty;
            }
        }
        for cell in top_cells(&votes, cfg.candidates_per_rotation) {
            let (c, r) = (cell % cols, cell / cols);
            let own = votes[cell];
            let mut around = (0u32, 0.0, 0.0);
            for rr in r.saturating_sub(1)..=(r + 1).min(rows - 1) {
                for cc in c.saturating_sub(1)..=(c + 1).min(cols - 1) {
                    let v = votes[rr * cols + cc];
                    around = (around.0 + v.0, around.1 + v.1, around.2 + v.2);
                }
            }
            for (n, sx, sy) in [own, around] {
                let t = RigidTransform::new(sx / n as f64, sy / n as f64, rot, (0.0, 0.0));
                let pairs = index.pair(a, &rb, t.dx, t.dy);
                if pairs.len() > best.0.len() {
                    best = (pairs, t);
                }
            }
        }
    }
    best
}

/// Indices of the `count` fullest nonempty cells, fullest first, lowest
/// index on ties.
fn top_cells(votes: &[(u32, f64, f64)], count: usize) -> Vec<usize> {
    let mut top: Vec<usize> = Vec::with_capacity(count + 1);
    for (i, v) in votes.iter().enumerate() {
        if v.0 == 0 {
            continue;
        }
        let pos = top.partition_point(|&j| votes[j].0 >= v.0);
        if pos < count {
            top.insert(pos, i);
            top.truncate(count);
        }
    }
    top
}

/// Greedy one-to-one pairing against a fixed minutiae set.
struct Pairing {
    index: SpatialIndex,
    radius: f64,
    offset: (f64, f64),
}

impl Pairing {
    fn new(a: &[Minutia], e: &Extent, radius: f64) -> Self {
        let offset = e.min;
        let cell = radius.max(1.0);
        let mut index = SpatialIndex::new(e.max.0 - e.min.0 + 1.0, e.max.1 - e.min.1 + 1.0, cell);
        for (i, m) in a.iter().enumerate() {
            index.insert(m.a - offset.0, m.b - offset.1, i);
        }
        Self {
            index,
            radius,
            offset,
        }
    }

    /// Pairs of `a` and `b` shifted by `(dx, dy)`, closest pairs first.
    fn pair(&self, a: &[Minutia], b: &[Minutia], dx: f64, dy: f64) -> Vec<(usize, usize)> {
        let mut close: Vec<(f64, usize, usize)> = Vec::new();
        for (j, mb) in b.iter().enumerate() {
            let moved = Minutia {
                a: mb.a + dx,
                b: mb.b + dy,
                ..*mb
            };
            let (qa, qb) = (moved.a - self.offset.0, moved.b - self.offset.1);
            for i in self.index.candidates(qa, qb, self.radius) {
                let d = dissimilarity(&a[i], &moved);
                if d <= self.radius {
                    close.push((d, i, j));
                }
            }
        }
        close.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
        let mut used_a = alloc::vec![false; a.len()];
        let mut used_b = alloc::vec![false; b.len()];
        let mut out = Vec::new();
        for (_, i, j) in close {
            if !used_a[i] && !used_b[j] {
                used_a[i] = true;
                used_b[j] = true;
                out.push((i, j));
            }
        }
        out
    }
}

/// Settings of the correlation attack.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorrelationAttackConfig {
    pub correlation: CorrelationConfig,
    /// Keep at most this many best-agreeing pairs as candidates.
    pub max_candidates: Option<usize>,
    /// Cap on decoder iterations.
    pub budget: Option<u64>,
}

impl Default for CorrelationAttackConfig {
    fn default() -> Self {
        Self {
            correlation: CorrelationConfig::default(),
            max_candidates: Some(24),
            budget: Some(1 << 20),
        }
    }
}

/// Correlates two classic records and decodes `va` using only the vault
/// points of its minutiae that found a partner in `vb`.
pub fn correlation_attack(
    va: &ClassicVault,
    vb: &ClassicVault,
    cfg: &CorrelationAttackConfig,
) -> (CorrelationResult, Decoded) {
    let result = correlation_score(&va.minutiae, &vb.minutiae, &cfg.correlation);
    let keep = cfg.max_candidates.unwrap_or(usize::MAX);
    let points: Vec<_> = result
        .matched_pairs
        .iter()
        .take(keep)
        .map(|&(i, _)| va.points[i])
        .collect();
    let k = va.params.k;
    let decoded = if points.len() < k {
        Decoded::Rejected {
            reason: RejectReason::TooFewPoints,
            iterations: 0,
        }
    } else {
        decode_exhaustive(&UnlockingSet::new(points), k, &va.digest, cfg.budget)
    };
    (result, decoded)
}
