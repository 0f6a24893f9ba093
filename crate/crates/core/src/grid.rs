//! Cross-matching-resistant vault over a hexagonal quantization grid.
//!
//! Every minutia is quantized to a grid point and an angle bucket; the set of
//! all `r * s` quantizations is the same for every record, genuine features
//! are the quantizations of the enrolled template and every other label is a
//! chaff point. Unlocking uses a randomized decoder with at most `D` draws.

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::analysis::{log2_bf_security, VaultRecord};
use crate::classic::{chaff_ordinate, decode_draws, Decoded, RejectReason, UnlockingSet};
use crate::error::{Error, Result};
use crate::field::{FieldElement, Polynomial, SecretDigest, VaultPoint};
use crate::minutiae::{Minutia, MinutiaeTemplate};

/// Default number of randomized decoder iterations.
pub const DEFAULT_DECODER_ITERATIONS: u64 = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridParams {
    /// Minimal distance between grid points, in pixels.
    pub lambda: f64,
    /// Angle quantization levels.
    pub s: usize,
    pub width: u32,
    pub height: u32,
    pub t_max: usize,
    pub k: usize,
}

impl GridParams {
    /// λ = 29, s = 6, tMax = 44, k = 7 on a 296 × 560 image.
    pub fn trained() -> Self {
        Self {
            lambda: 29.0,
            s: 6,
            width: 296,
            height: 560,
            t_max: 44,
            k: 7,
        }
    }

    pub fn validate(&self) -> Result<HexGrid> {
        if self.s == 0 || self.k == 0 || self.t_max < self.k {
            return Err(Error::InvalidParameter("need s >= 1 and 1 <= k <= t_max"));
        }
        let grid = build_grid(self.lambda, self.width, self.height)?;
        if grid.len() * self.s > crate::field::ORDER {
            return Err(Error::InvalidParameter("r * s exceeds the field size"));
        }
        Ok(grid)
    }

    pub fn vault_size(&self) -> Result<usize> {
        Ok(self.validate()?.len() * self.s)
    }
}

/// Hexagonal grid anchored at the image origin: rows `lambda * sqrt(3)/2`
/// apart, odd rows shifted by `lambda / 2`, points kept inside the closed
/// image rectangle, numbered row by row.
#[derive(Clone, Debug, PartialEq)]
pub struct HexGrid {
    pub lambda: f64,
    pub points: Vec<(f64, f64)>,
    /// Index of the first point of each row, plus a final sentinel.
    row_starts: Vec<usize>,
}

const EPS: f64 = 1e-9;

impl HexGrid {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn row_height(&self) -> f64 {
        self.lambda * libm::sqrt(3.0) / 2.0
    }

    fn row_offset(&self, row: usize) -> f64 {
        if row % 2 == 1 {
            self.lambda / 2.0
        } else {
            0.0
        }
    }

    /// Index of the grid point nearest to `(a, b)`; ties go to the lowest index.
    pub fn nearest(&self, a: f64, b: f64) -> usize {
        let rows = self.row_starts.len() - 1;
        let approx_row = libm::round(b / self.row_height());
        let mut best = (f64::INFINITY, 0usize);
        for dr in -2i64..=2 {
            let row = approx_row as i64 + dr;
            if row < 0 || row >= rows as i64 {
                continue;
            }
            let row = row as usize;
            let (start, end) = (self.row_starts[row], self.row_starts[row + 1]);
            if start == end {
                continue;
            }
            let approx_col = libm::round((a - self.row_offset(row)) / self.lambda) as i64;
            let cols = (end - start) as i64;
            for dc in -2i64..=2 {
                let col = approx_col + dc;
                if col < 0 || col >= cols {
                    continue;
                }
                let i = start + col as usize;
                let (x, y) = self.points[i];
                let d = (x - a) * (x - a) + (y - b) * (y - b);
                if d < best.0 || (d == best.0 && i < best.1) {
                    best = (d, i);
                }
            }
        }
        if best.0.is_finite() {
            best.1
        } else {
            self.nearest_exhaustive(a, b)
        }
    }

    /// Reference implementation of [`Self::nearest`].
    pub fn nearest_exhaustive(&self, a: f64, b: f64) -> usize {
        let mut best = (f64::INFINITY, 0usize);
        for (i, &(x, y)) in self.points.iter().enumerate() {
            let d = (x - a) * (x - a) + (y - b) * (y - b);
            if d < best.0 {
                best = (d, i);
            }
        }
        best.1
    }
}

pub fn build_grid(lambda: f64, width: u32, height: u32) -> Result<HexGrid> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter("grid distance must be positive"));
    }
    let (w, h) = (width as f64, height as f64);
    let row_height = lambda * libm::sqrt(3.0) / 2.0;
    let mut points = Vec::new();
    let mut row_starts = Vec::new();
    let mut row = 0usize;
    loop {
        let y = row as f64 * row_height;
        if y > h + EPS {
            break;
        }
        row_starts.push(points.len());
        let offset = if row % 2 == 1 { lambda / 2.0 } else { 0.0 };
        let mut col = 0usize;
        loop {
            let x = offset + col as f64 * lambda;
            if x > w + EPS {
                break;
            }
            points.push((x, y));
            col += 1;
        }
        row += 1;
    }
    row_starts.push(points.len());
    Ok(HexGrid {
        lambda,
        points,
        row_starts,
    })
}

/// Angle bucket `floor(theta * s / 360)`.
pub fn angle_bucket(theta: f64, s: usize) -> usize {
    let j = libm::floor(crate::minutiae::wrap_degrees(theta) * s as f64 / 360.0) as usize;
    j.min(s - 1)
}

/// Field label `i + r * j` of a minutia's grid cell `i` and angle bucket `j`.
pub fn quantize_minutia(m: &Minutia, grid: &HexGrid, s: usize) -> FieldElement {
    let i = grid.nearest(m.a, m.b);
    let j = angle_bucket(m.theta, s);
    FieldElement::new((i + grid.len() * j) as u16)
}

/// Quantizations of the best-quality minutiae, at most `t_max` distinct
/// labels, sorted ascending.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct FeatureSet {
    pub elements: Vec<FieldElement>,
}

impl FeatureSet {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn contains(&self, x: FieldElement) -> bool {
        self.elements.binary_search(&x).is_ok()
    }

    pub fn intersection_size(&self, other: &FeatureSet) -> usize {
        let (mut i, mut j, mut n) = (0, 0, 0);
        while i < self.elements.len() && j < other.elements.len() {
            match self.elements[i].cmp(&other.elements[j]) {
                core::cmp::Ordering::Less => i += 1,
                core::cmp::Ordering::Greater => j += 1,
                core::cmp::Ordering::Equal => {
                    n += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        n
    }
}

pub fn extract_feature_set(
    template: &MinutiaeTemplate,
    grid: &HexGrid,
    s: usize,
    t_max: usize,
) -> FeatureSet {
    let mut elements: Vec<FieldElement> = Vec::with_capacity(t_max);
    for m in template.minutiae() {
        if elements.len() >= t_max {
            break;
        }
        let x = quantize_minutia(m, grid, s);
        if let Err(pos) = elements.binary_search(&x) {
            elements.insert(pos, x);
        }
    }
    FeatureSet { elements }
}

/// Published record: one ordinate per label `0..r*s`, abscissae implicit.
#[derive(Clone, Debug, PartialEq)]
pub struct GridVault {
    pub params: GridParams,
    /// `points[i].x == i`.
    pub points: Vec<VaultPoint>,
    pub digest: SecretDigest,
}

impl GridVault {
    pub fn ordinates(&self) -> impl Iterator<Item = FieldElement> + '_ {
        self.points.iter().map(|p| p.y)
    }
}

impl VaultRecord for GridVault {
    fn vault_points(&self) -> &[VaultPoint] {
        &self.points
    }
    fn degree_bound(&self) -> usize {
        self.params.k
    }
    fn secret_digest(&self) -> &SecretDigest {
        &self.digest
    }
}

pub fn grid_enroll(
    template: &MinutiaeTemplate,
    params: &GridParams,
    secret: &Polynomial,
    seed: u64,
) -> Result<GridVault> {
    let grid = params.validate()?;
    if secret.degree_bound() != params.k {
        return Err(Error::InvalidParameter("secret degree bound differs from k"));
    }
    let a = extract_feature_set(template, &grid, params.s, params.t_max);
    if a.len() < params.k {
        return Err(Error::FailureToCapture {
            selected: a.len(),
            required: params.k,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = grid.len() * params.s;
    let points = (0..n)
        .map(|i| {
            let x = FieldElement::new(i as u16);
            let fx = secret.eval(x);
            let y = if a.contains(x) {
                fx
            } else {
                chaff_ordinate(&mut rng, fx)
            };
            VaultPoint::new(x, y)
        })
        .collect();
    Ok(GridVault {
        params: *params,
        points,
        digest: secret.digest(),
    })
}

/// Vault points whose abscissa is a quantization of the aligned query.
pub fn grid_unlocking_set(vault: &GridVault, query: &MinutiaeTemplate) -> Result<UnlockingSet> {
    let grid = vault.params.validate()?;
    let b = extract_feature_set(query, &grid, vault.params.s, vault.params.t_max);
    Ok(UnlockingSet::new(
        b.elements
            .iter()
            .filter_map(|x| vault.points.get(x.value() as usize).copied())
            .collect(),
    ))
}

pub fn grid_unlock(vault: &GridVault, query: &MinutiaeTemplate, d: u64, seed: u64) -> Result<Decoded> {
    let u = grid_unlocking_set(vault, query)?;
    Ok(randomized_decode(&u, vault.params.k, d, &vault.digest, seed))
}

/// At most `d` independent uniform `k`-subset draws, each interpolated and
/// hash-checked; the first accepting draw wins.
pub fn randomized_decode(
    unlocking: &UnlockingSet,
    k: usize,
    d: u64,
    digest: &SecretDigest,
    seed: u64,
) -> Decoded {
    if k == 0 || unlocking.len() < k {
        return Decoded::Rejected {
            reason: RejectReason::TooFewPoints,
            iterations: 0,
        };
    }
    let mut pts = unlocking.points.clone();
    pts.sort_by_key(|p| p.x);
    match decode_draws(&pts, k, digest, seed, 0..d) {
        Some((draw, secret)) => Decoded::Recovered {
            secret,
            iterations: draw + 1,
        },
        None => Decoded::Rejected {
            reason: RejectReason::BudgetExhausted,
            iterations: d,
        },
    }
}

/// `p(t, omega, D) = 1 - (1 - bf(t, omega, k)^-1)^D` for `omega >= k`, else 0.
pub fn decode_success_probability(t: usize, omega: usize, k: usize, d: u64) -> Result<f64> {
    if omega > t {
        return Err(Error::InvalidParameter("need omega <= t"));
    }
    if omega < k || d == 0 {
        return Ok(0.0);
    }
    let q = libm::exp2(-log2_bf_security(t as u64, omega as u64, k as u64)?);
    if q >= 1.0 {
        return Ok(1.0);
    }
    Ok(-libm::expm1(d as f64 * libm::log1p(-q)))
}

/// `1 - p(t, omega, D)`, accurate when the success probability is close to one.
pub fn decode_failure_probability(t: usize, omega: usize, k: usize, d: u64) -> Result<f64> {
    Ok(libm::exp(log_decode_failure_probability(t, omega, k, d)?))
}

/// `ln(1 - p(t, omega, D))`; `-inf` when decoding cannot fail. Stays finite
/// where the probability itself underflows.
pub fn log_decode_failure_probability(t: usize, omega: usize, k: usize, d: u64) -> Result<f64> {
    if omega > t {
        return Err(Error::InvalidParameter("need omega <= t"));
    }
    if omega < k || d == 0 {
        return Ok(0.0);
    }
    let q = libm::exp2(-log2_bf_security(t as u64, omega as u64, k as u64)?);
    if q >= 1.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(d as f64 * libm::log1p(-q))
}

/// The fixed feature set `E` laid out as minutiae: grid point `i` with the
/// central angle of bucket `j`, for every label `i + r * j`.
pub fn grid_minutiae(params: &GridParams) -> Result<Vec<Minutia>> {
    let grid = params.validate()?;
    let step = 360.0 / params.s as f64;
    Ok((0..params.s)
        .flat_map(|j| {
            grid.points
                .iter()
                .map(move |&(a, b)| Minutia::new(a, b, (j as f64 + 0.5) * step, 0.0))
        })
        .collect())
}

/// Configurations swept by [`train_parameters`].
#[derive(Clone, Debug, PartialEq)]
pub struct SearchSpace {
    pub lambdas: Vec<f64>,
    pub s: Vec<usize>,
    pub t_max: Vec<usize>,
    /// Degree bounds to try; `None` means every `k` in `1..=t_max`.
    pub k: Option<Vec<usize>>,
}

impl SearchSpace {
    /// λ = 8..32, s = 1..8, tMax = 10..60, k = 1..tMax.
    pub fn full() -> Self {
        Self {
            lambdas: (8..=32).map(|l| l as f64).collect(),
            s: (1..=8).collect(),
            t_max: (10..=60).collect(),
            k: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScoreRow {
    pub params: GridParams,
    pub genuine_accepts: usize,
    pub genuine_trials: usize,
    pub false_accepts: usize,
    pub impostor_trials: usize,
}

impl ScoreRow {
    pub fn gar(&self) -> f64 {
        ratio(self.genuine_accepts, self.genuine_trials)
    }

    pub fn far(&self) -> f64 {
        ratio(self.false_accepts, self.impostor_trials)
    }

    fn k_ratio(&self) -> f64 {
        self.params.k as f64 / self.params.t_max as f64
    }

    /// Selection order: higher GAR, then lower FAR, then larger `k / tMax`.
    fn better_than(&self, other: &ScoreRow) -> bool {
        let (a, b) = (self, other);
        let gar = (a.genuine_accepts * b.genuine_trials).cmp(&(b.genuine_accepts * a.genuine_trials));
        if gar != core::cmp::Ordering::Equal {
            return gar.is_gt();
        }
        let far = (a.false_accepts * b.impostor_trials).cmp(&(b.false_accepts * a.impostor_trials));
        if far != core::cmp::Ordering::Equal {
            return far.is_lt();
        }
        a.k_ratio() > b.k_ratio()
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingOutcome {
    pub best: GridParams,
    pub table: Vec<ScoreRow>,
}

/// Picks the winning row of a score table.
pub fn select_best(table: &[ScoreRow]) -> Option<ScoreRow> {
    let mut best: Option<ScoreRow> = None;
    for row in table {
        if best.as_ref().is_none_or(|b| row.better_than(b)) {
            best = Some(*row);
        }
    }
    best
}

/// Sweeps `space` over a training set given as impressions per finger.
/// Genuine trials enroll impression `i` and query with impression `j > i`
/// of the same finger; impostor trials do the same with the first
/// impressions of fingers `I < J`. A trial accepts iff both feature sets
/// share at least `k` labels and enrollment had at least `k` labels.
pub fn train_parameters(
    training: &[Vec<MinutiaeTemplate>],
    space: &SearchSpace,
) -> Result<TrainingOutcome> {
    let first = training
        .iter()
        .find_map(|f| f.first())
        .ok_or(Error::Empty("training set"))?;
    if training.iter().any(|f| f.len() < 2) {
        return Err(Error::InvalidParameter("need at least two impressions per finger"));
    }
    let (width, height) = (first.width, first.height);
    let mut table = Vec::new();
    for &lambda in &space.lambdas {
        let grid = build_grid(lambda, width, height)?;
        for &s in &space.s {
            if s == 0 || grid.len() * s > crate::field::ORDER {
                continue;
            }
            for &t_max in &space.t_max {
                let sets: Vec<Vec<FeatureSet>> = training
                    .iter()
                    .map(|f| f.iter().map(|t| extract_feature_set(t, &grid, s, t_max)).collect())
                    .collect();
                // (|A|, |A ∩ B|) per trial
                let mut genuine = Vec::new();
                for f in &sets {
                    for i in 0..f.len() {
                        for j in i + 1..f.len() {
                            genuine.push((f[i].len(), f[i].intersection_size(&f[j])));
                        }
                    }
                }
                let mut impostor = Vec::new();
                for i in 0..sets.len() {
                    for j in i + 1..sets.len() {
                        impostor.push((sets[i][0].len(), sets[i][0].intersection_size(&sets[j][0])));
                    }
                }
                let ks: Vec<usize> = match &space.k {
                    Some(ks) => ks.iter().copied().filter(|&k| k >= 1 && k <= t_max).collect(),
                    None => (1..=t_max).collect(),
                };
                let accepts = |trials: &[(usize, usize)], k: usize| {
                    trials.iter().filter(|&&(a, o)| a >= k && o >= k).count()
                };
                for k in ks {
                    table.push(ScoreRow {
                        params: GridParams {
                            lambda,
                            s,
                            width,
                            height,
                            t_max,
                            k,
                        },
                        genuine_accepts: accepts(&genuine, k),
                        genuine_trials: genuine.len(),
                        false_accepts: accepts(&impostor, k),
                        impostor_trials: impostor.len(),
                    });
                }
            }
        }
    }
    let best = select_best(&table).ok_or(Error::Empty("search space"))?;
    Ok(TrainingOutcome {
        best: best.params,
        table,
    })
}
