//! Minutiae, templates, rigid transforms and a seeded synthetic finger model.

use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Weight of the angular term in [`dissimilarity`].
pub const ANGLE_WEIGHT: f64 = 0.2;

/// Default well-separation threshold.
pub const SEPARATION_THRESHOLD: f64 = 25.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Minutia {
    /// Horizontal position in pixels.
    pub a: f64,
    /// Vertical position in pixels.
    pub b: f64,
    /// Direction in degrees, `0 <= theta < 360`.
    pub theta: f64,
    pub quality: f64,
}

impl Minutia {
    pub fn new(a: f64, b: f64, theta: f64, quality: f64) -> Self {
        Self {
            a,
            b,
            theta: wrap_degrees(theta),
            quality,
        }
    }

    pub fn position_distance(&self, other: &Minutia) -> f64 {
        libm::hypot(self.a - other.a, self.b - other.b)
    }
}

/// Maps any angle in degrees into `[0, 360)`.
pub fn wrap_degrees(theta: f64) -> f64 {
    let r = theta % 360.0;
    let r = if r < 0.0 { r + 360.0 } else { r };
    // -1e-18 % 360 + 360 rounds to 360
    if r >= 360.0 {
        0.0
    } else {
        r
    }
}

/// Circular distance between two directions, in `[0, 180]`.
pub fn angular_distance(t1: f64, t2: f64) -> f64 {
    let d = libm::fabs(t1 - t2) % 360.0;
    if d > 180.0 {
        360.0 - d
    } else {
        d
    }
}

/// Position distance plus 0.2 times the circular angle distance.
pub fn dissimilarity(m1: &Minutia, m2: &Minutia) -> f64 {
    m1.position_distance(m2) + ANGLE_WEIGHT * angular_distance(m1.theta, m2.theta)
}

/// A minutiae template ordered by descending quality.
#[derive(Clone, Debug, PartialEq)]
pub struct MinutiaeTemplate {
    minutiae: Vec<Minutia>,
    pub width: u32,
    pub height: u32,
}

impl MinutiaeTemplate {
    /// Builds a template, stably sorting the minutiae by descending quality.
    pub fn new(mut minutiae: Vec<Minutia>, width: u32, height: u32) -> Self {
        sort_by_quality(&mut minutiae);
        Self {
            minutiae,
            width,
            height,
        }
    }

    pub fn minutiae(&self) -> &[Minutia] {
        &self.minutiae
    }

    pub fn len(&self) -> usize {
        self.minutiae.len()
    }

    pub fn is_empty(&self) -> bool {
        self.minutiae.is_empty()
    }

    pub fn contains_point(&self, a: f64, b: f64) -> bool {
        a >= 0.0 && b >= 0.0 && a < self.width as f64 && b < self.height as f64
    }

    pub fn transformed(&self, transform: &RigidTransform) -> Self {
        Self {
            minutiae: self.minutiae.iter().map(|m| transform.apply(m)).collect(),
            width: self.width,
            height: self.height,
        }
    }
}

fn sort_by_quality(minutiae: &mut [Minutia]) {
    minutiae.sort_by(|x, y| y.quality.partial_cmp(&x.quality).unwrap_or(Ordering::Equal));
}

/// Greedy selection in quality order: a minutia is kept iff it is
/// well-separated from every minutia kept before it. Stops after `t_max`.
pub fn select_well_separated(
    template: &MinutiaeTemplate,
    t_min: usize,
    t_max: usize,
    threshold: f64,
) -> Result<Vec<Minutia>> {
    let idx = select_well_separated_indices(template, t_min, t_max, threshold)?;
    Ok(idx.into_iter().map(|i| template.minutiae[i]).collect())
}

/// As [`select_well_separated`], returning positions in `template.minutiae()`.
pub fn select_well_separated_indices(
    template: &MinutiaeTemplate,
    t_min: usize,
    t_max: usize,
    threshold: f64,
) -> Result<Vec<usize>> {
    if !(threshold > 0.0) {
        return Err(Error::InvalidParameter("separation threshold must be positive"));
    }
    let mut kept: Vec<usize> = Vec::with_capacity(t_max);
    let all = template.minutiae();
    for (i, m) in all.iter().enumerate() {
        if kept.len() >= t_max {
            break;
        }
        if kept.iter().all(|&k| dissimilarity(&all[k], m) > threshold) {
            kept.push(i);
        }
    }
    if kept.len() < t_min {
        return Err(Error::FailureToCapture {
            selected: kept.len(),
            required: t_min,
        });
    }
    Ok(kept)
}

/// Rotation about `center` followed by a translation.
///
/// Angles are counter-clockwise with the x axis to the right and the y axis
/// up, so a 90° turn about the origin maps `(1, 0)` to `(0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RigidTransform {
    pub dx: f64,
    pub dy: f64,
    /// Degrees.
    pub rotation: f64,
    pub center: (f64, f64),
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl RigidTransform {
    pub const IDENTITY: Self = Self {
        dx: 0.0,
        dy: 0.0,
        rotation: 0.0,
        center: (0.0, 0.0),
    };

    pub fn new(dx: f64, dy: f64, rotation: f64, center: (f64, f64)) -> Self {
        Self {
            dx,
            dy,
            rotation,
            center,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.dx == 0.0 && self.dy == 0.0 && wrap_degrees(self.rotation) == 0.0
    }

    #[inline]
    pub fn apply_point(&self, a: f64, b: f64) -> (f64, f64) {
        if self.rotation == 0.0 {
            return (a + self.dx, b + self.dy);
        }
        let (s, c) = libm::sincos(self.rotation.to_radians());
        let (x, y) = (a - self.center.0, b - self.center.1);
        (
            c * x - s * y + self.center.0 + self.dx,
            s * x + c * y + self.center.1 + self.dy,
        )
    }

    pub fn apply(&self, m: &Minutia) -> Minutia {
        let (a, b) = self.apply_point(m.a, m.b);
        Minutia {
            a,
            b,
            theta: wrap_degrees(m.theta + self.rotation),
            quality: m.quality,
        }
    }

    pub fn inverse(&self) -> Self {
        // p = R^-1 (p' - c - d) + c
        let (s, c) = libm::sincos(-self.rotation.to_radians());
        let (dx, dy) = (-self.dx, -self.dy);
        Self {
            dx: c * dx - s * dy,
            dy: s * dx + c * dy,
            rotation: -self.rotation,
            center: self.center,
        }
    }

    /// `self ∘ first`: applies `first`, then `self`.
    pub fn compose(&self, first: &RigidTransform) -> Self {
        let (fx, fy) = first.apply_point(0.0, 0.0);
        let (ox, oy) = self.apply_point(fx, fy);
        Self {
            dx: ox,
            dy: oy,
            rotation: self.rotation + first.rotation,
            center: (0.0, 0.0),
        }
    }
}

/// Bucket grid over the image plane for radius queries on minutiae positions.
#[derive(Clone, Debug)]
pub(crate) struct SpatialIndex {
    cell: f64,
    cols: usize,
    rows: usize,
    buckets: Vec<Vec<usize>>,
}

impl SpatialIndex {
    pub(crate) fn new(width: f64, height: f64, cell: f64) -> Self {
        let cell = if cell > 0.0 { cell } else { 1.0 };
        let cols = (libm::ceil(width.max(1.0) / cell) as usize).max(1) + 2;
        let rows = (libm::ceil(height.max(1.0) / cell) as usize).max(1) + 2;
        Self {
            cell,
            cols,
            rows,
            buckets: alloc::vec![Vec::new(); cols * rows],
        }
    }

    fn cell_of(&self, a: f64, b: f64) -> (usize, usize) {
        // one spare ring on each side absorbs slightly out-of-range points
        let c = (libm::floor(a / self.cell) + 1.0).clamp(0.0, (self.cols - 1) as f64) as usize;
        let r = (libm::floor(b / self.cell) + 1.0).clamp(0.0, (self.rows - 1) as f64) as usize;
        (c, r)
    }

    pub(crate) fn insert(&mut self, a: f64, b: f64, id: usize) {
        let (c, r) = self.cell_of(a, b);
        self.buckets[r * self.cols + c].push(id);
    }

    /// Ids in cells that may hold points within `radius` of `(a, b)`.
    pub(crate) fn candidates(&self, a: f64, b: f64, radius: f64) -> impl Iterator<Item = usize> + '_ {
        let span = libm::ceil(radius / self.cell) as isize;
        let (c, r) = self.cell_of(a, b);
        let (c, r) = (c as isize, r as isize);
        let (cols, rows) = (self.cols as isize, self.rows as isize);
        (r - span..=r + span)
            .filter(move |&rr| rr >= 0 && rr < rows)
            .flat_map(move |rr| {
                (c - span..=c + span)
                    .filter(move |&cc| cc >= 0 && cc < cols)
                    .map(move |cc| (rr * cols + cc) as usize)
            })
            .flat_map(move |i| self.buckets[i].iter().copied())
    }
}

/// Consecutive rejected proposals tolerated by the rejection samplers
/// before giving up.
pub const MAX_CONSECUTIVE_REJECTIONS: usize = 20_000;

/// Synthetic master finger: `count` minutiae placed uniformly at random,
/// pairwise dissimilarity above `min_separation`, quality uniform in
/// `[0.5, 1.0]`. Deterministic in `seed`.
pub fn synthesize_finger(
    seed: u64,
    count: usize,
    width: u32,
    height: u32,
    min_separation: f64,
) -> Result<MinutiaeTemplate> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (width as f64, height as f64);
    let mut index = SpatialIndex::new(w, h, min_separation.max(1.0));
    let mut placed: Vec<Minutia> = Vec::with_capacity(count);
    let mut rejected = 0;
    while placed.len() < count {
        let m = Minutia::new(
            rng.gen_range(0.0..w),
            rng.gen_range(0.0..h),
            rng.gen_range(0.0..360.0),
            rng.gen_range(0.5..=1.0),
        );
        let ok = index
            .candidates(m.a, m.b, min_separation)
            .all(|i| dissimilarity(&placed[i], &m) > min_separation);
        if ok {
            index.insert(m.a, m.b, placed.len());
            placed.push(m);
            rejected = 0;
        } else {
            rejected += 1;
            if rejected >= MAX_CONSECUTIVE_REJECTIONS {
                return Err(Error::Generation {
                    missing: count - placed.len(),
                });
            }
        }
    }
    Ok(MinutiaeTemplate::new(placed, width, height))
}

/// Intra-class variation applied by [`synthesize_impression`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ImpressionNoise {
    /// Standard deviation of the position jitter, pixels.
    pub pos_noise: f64,
    /// Standard deviation of the wrapped angle jitter, degrees.
    pub ang_noise: f64,
    pub drop_rate: f64,
    pub spurious_count: usize,
    /// Standard deviation of the quality perturbation that reorders minutiae.
    pub quality_noise: f64,
}

impl ImpressionNoise {
    pub const NONE: Self = Self {
        pos_noise: 0.0,
        ang_noise: 0.0,
        drop_rate: 0.0,
        spurious_count: 0,
        quality_noise: 0.0,
    };
}

impl Default for ImpressionNoise {
    fn default() -> Self {
        Self {
            pos_noise: 4.0,
            ang_noise: 8.0,
            drop_rate: 0.2,
            spurious_count: 4,
            quality_noise: 0.1,
        }
    }
}

/// A synthetic impression together with the master index each of its
/// minutiae derives from (`None` for spurious minutiae).
#[derive(Clone, Debug, PartialEq)]
pub struct TracedImpression {
    pub template: MinutiaeTemplate,
    pub origin: Vec<Option<usize>>,
}

/// Noisy, partial, transformed impression of a master finger.
pub fn synthesize_impression(
    master: &MinutiaeTemplate,
    seed: u64,
    noise: &ImpressionNoise,
    transform: &RigidTransform,
) -> Result<MinutiaeTemplate> {
    synthesize_traced_impression(master, seed, noise, transform).map(|t| t.template)
}

pub fn synthesize_traced_impression(
    master: &MinutiaeTemplate,
    seed: u64,
    noise: &ImpressionNoise,
    transform: &RigidTransform,
) -> Result<TracedImpression> {
    if !(0.0..=1.0).contains(&noise.drop_rate) {
        return Err(Error::InvalidParameter("drop rate must lie in [0, 1]"));
    }
    if noise.pos_noise < 0.0 || noise.ang_noise < 0.0 || noise.quality_noise < 0.0 {
        return Err(Error::InvalidParameter("noise scales must be non-negative"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pos = Normal::new(0.0, noise.pos_noise).map_err(|_| Error::InvalidParameter("pos_noise"))?;
    let ang = Normal::new(0.0, noise.ang_noise).map_err(|_| Error::InvalidParameter("ang_noise"))?;
    let qual =
        Normal::new(0.0, noise.quality_noise).map_err(|_| Error::InvalidParameter("quality_noise"))?;

    let mut items: Vec<(Minutia, Option<usize>)> = Vec::new();
    for (i, m) in master.minutiae().iter().enumerate() {
        if noise.drop_rate > 0.0 && rng.gen::<f64>() < noise.drop_rate {
            continue;
        }
        let mut j = *m;
        if noise.pos_noise > 0.0 {
            j.a += pos.sample(&mut rng);
            j.b += pos.sample(&mut rng);
        }
        if noise.ang_noise > 0.0 {
            j.theta = wrap_degrees(j.theta + ang.sample(&mut rng));
        }
        if noise.quality_noise > 0.0 {
            j.quality = (j.quality + qual.sample(&mut rng)).clamp(0.0, 1.0);
        }
        items.push((j, Some(i)));
    }
    let (w, h) = (master.width as f64, master.height as f64);
    for _ in 0..noise.spurious_count {
        let m = Minutia::new(
            rng.gen_range(0.0..w.max(f64::MIN_POSITIVE)),
            rng.gen_range(0.0..h.max(f64::MIN_POSITIVE)),
            rng.gen_range(0.0..360.0),
            rng.gen_range(0.0..0.7),
        );
        items.push((m, None));
    }
    let mut kept: Vec<(Minutia, Option<usize>)> = items
        .into_iter()
        .map(|(m, o)| (transform.apply(&m), o))
        .filter(|(m, _)| master.contains_point(m.a, m.b))
        .collect();
    kept.sort_by(|x, y| y.0.quality.partial_cmp(&x.0.quality).unwrap_or(Ordering::Equal));
    let (minutiae, origin) = kept.into_iter().unzip();
    Ok(TracedImpression {
        template: MinutiaeTemplate {
            minutiae,
            width: master.width,
            height: master.height,
        },
        origin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn m(a: f64, b: f64, theta: f64) -> Minutia {
        Minutia::new(a, b, theta, 1.0)
    }

    #[test]
    fn dissimilarity_examples() {
        assert_eq!(dissimilarity(&m(10.0, 10.0, 45.0), &m(10.0, 10.0, 45.0)), 0.0);
        assert!((dissimilarity(&m(5.0, 5.0, 0.0), &m(5.0, 5.0, 350.0)) - 2.0).abs() < 1e-12);
        assert!((dissimilarity(&m(0.0, 0.0, 0.0), &m(3.0, 4.0, 0.0)) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn angular_distance_is_circular() {
        assert_eq!(angular_distance(0.0, 180.0), 180.0);
        assert_eq!(angular_distance(10.0, 350.0), 20.0);
        assert_eq!(angular_distance(350.0, 10.0), 20.0);
        assert_eq!(wrap_degrees(-90.0), 270.0);
        assert_eq!(wrap_degrees(720.0), 0.0);
    }

    #[test]
    fn select_keeps_distant_minutiae() {
        let t = MinutiaeTemplate::new(
            vec![m(10.0, 10.0, 0.0), m(100.0, 10.0, 0.0), m(10.0, 200.0, 0.0)],
            296,
            560,
        );
        assert_eq!(select_well_separated(&t, 1, 24, 25.0).unwrap().len(), 3);
    }

    #[test]
    fn select_keeps_better_of_coincident_pair() {
        let t = MinutiaeTemplate::new(
            vec![Minutia::new(50.0, 50.0, 0.0, 0.3), Minutia::new(50.0, 50.0, 0.0, 0.9)],
            296,
            560,
        );
        let kept = select_well_separated(&t, 1, 24, 25.0).unwrap();
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].quality, 0.9);
    }

    #[test]
    fn dense_cluster_fails_to_capture() {
        let cluster: Vec<_> = (0..20)
            .map(|i| {
                let ang = i as f64 * 18.0;
                let (s, c) = libm::sincos(ang.to_radians());
                Minutia::new(100.0 + 5.0 * c, 100.0 + 5.0 * s, 90.0, 1.0 - i as f64 * 0.01)
            })
            .collect();
        let t = MinutiaeTemplate::new(cluster, 296, 560);
        assert_eq!(
            select_well_separated(&t, 18, 24, 25.0),
            Err(Error::FailureToCapture {
                selected: 1,
                required: 18
            })
        );
    }

    #[test]
    fn identity_transform_is_noop() {
        let t = synthesize_finger(1, 30, 296, 560, 25.0).unwrap();
        assert_eq!(t.transformed(&RigidTransform::IDENTITY), t);
    }

    #[test]
    fn quarter_turn_about_origin() {
        let r = RigidTransform::new(0.0, 0.0, 90.0, (0.0, 0.0));
        let out = r.apply(&m(1.0, 0.0, 0.0));
        assert!(out.a.abs() < 1e-12 && (out.b - 1.0).abs() < 1e-12);
        assert_eq!(out.theta, 90.0);
    }

    #[test]
    fn inverse_and_composition() {
        let t = synthesize_finger(2, 40, 296, 560, 25.0).unwrap();
        let tr = RigidTransform::new(12.5, -7.0, 17.0, (148.0, 280.0));
        let back = t.transformed(&tr).transformed(&tr.inverse());
        for (x, y) in t.minutiae().iter().zip(back.minutiae()) {
            assert!((x.a - y.a).abs() < 1e-9 && (x.b - y.b).abs() < 1e-9);
            assert!(angular_distance(x.theta, y.theta) < 1e-9);
        }
        let other = RigidTransform::new(-3.0, 4.0, -40.0, (10.0, 20.0));
        let composed = other.compose(&tr);
        for p in t.minutiae() {
            let two = other.apply(&tr.apply(p));
            let one = composed.apply(p);
            assert!((two.a - one.a).abs() < 1e-9 && (two.b - one.b).abs() < 1e-9);
            assert!(angular_distance(two.theta, one.theta) < 1e-9);
        }
    }

    #[test]
    fn synthesize_is_deterministic_and_separated() {
        let a = synthesize_finger(99, 40, 296, 560, 25.0).unwrap();
        assert_eq!(a, synthesize_finger(99, 40, 296, 560, 25.0).unwrap());
        assert_eq!(a.len(), 40);
        let ms = a.minutiae();
        for i in 0..ms.len() {
            assert!((0.5..=1.0).contains(&ms[i].quality));
            for j in i + 1..ms.len() {
                assert!(dissimilarity(&ms[i], &ms[j]) > 25.0);
            }
        }
    }

    #[test]
    fn overfull_finger_is_a_generation_error() {
        assert!(matches!(
            synthesize_finger(5, 10_000, 296, 560, 25.0),
            Err(Error::Generation { .. })
        ));
    }

    #[test]
    fn zero_noise_impression_equals_master() {
        let master = synthesize_finger(4, 35, 296, 560, 25.0).unwrap();
        let imp =
            synthesize_impression(&master, 8, &ImpressionNoise::NONE, &RigidTransform::IDENTITY).unwrap();
        assert_eq!(imp, master);
    }

    #[test]
    fn full_drop_leaves_only_spurious() {
        let master = synthesize_finger(4, 35, 296, 560, 25.0).unwrap();
        let noise = ImpressionNoise {
            drop_rate: 1.0,
            spurious_count: 6,
            ..ImpressionNoise::NONE
        };
        let imp = synthesize_traced_impression(&master, 8, &noise, &RigidTransform::IDENTITY).unwrap();
        assert_eq!(imp.template.len(), 6);
        assert!(imp.origin.iter().all(Option::is_none));
    }

    #[test]
    fn noisy_impressions_mostly_match_master() {
        // Monte-Carlo over 100 seeds; the generator itself is the oracle.
        let noise = ImpressionNoise {
            pos_noise: 4.0,
            ang_noise: 8.0,
            drop_rate: 0.2,
            ..ImpressionNoise::default()
        };
        let (mut near, mut total) = (0usize, 0usize);
        for seed in 0..100 {
            let master = synthesize_finger(seed, 40, 296, 560, 25.0).unwrap();
            let imp = synthesize_impression(&master, seed + 1000, &noise, &RigidTransform::IDENTITY).unwrap();
            for q in imp.minutiae() {
                total += 1;
                if master.minutiae().iter().any(|p| dissimilarity(p, q) <= 25.0) {
                    near += 1;
                }
            }
        }
        assert!(near as f64 >= 0.6 * total as f64, "{near}/{total}");
    }

    #[test]
    fn impression_minutiae_stay_in_region() {
        let master = synthesize_finger(6, 40, 296, 560, 25.0).unwrap();
        let tr = RigidTransform::new(30.0, -25.0, 12.0, (148.0, 280.0));
        let imp = synthesize_impression(&master, 3, &ImpressionNoise::default(), &tr).unwrap();
        assert!(imp.minutiae().iter().all(|q| master.contains_point(q.a, q.b)));
        assert!(imp.minutiae().windows(2).all(|w| w[0].quality >= w[1].quality));
    }
}
