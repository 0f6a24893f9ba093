//! Binomial estimation of false-acceptance rates: point estimates,
//! Clopper-Pearson intervals, the rule of three, and median trial counts.

use crate::error::{Error, Result};

/// `successes` out of `trials` Bernoulli attempts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrialRecord {
    pub successes: u64,
    pub trials: u64,
}

impl TrialRecord {
    pub fn new(successes: u64, trials: u64) -> Result<Self> {
        if trials == 0 || successes > trials {
            return Err(Error::InvalidParameter("need 0 <= successes <= trials, trials >= 1"));
        }
        Ok(Self { successes, trials })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConfidenceInterval {
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
}

impl ConfidenceInterval {
    pub fn contains(&self, p: f64) -> bool {
        self.lower <= p && p <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

pub fn point_estimate(r: &TrialRecord) -> f64 {
    r.successes as f64 / r.trials as f64
}

const TOLERANCE: f64 = 1e-10;

fn ln_choose(n: u64, k: u64) -> f64 {
    libm::lgamma(n as f64 + 1.0) - libm::lgamma(k as f64 + 1.0) - libm::lgamma((n - k) as f64 + 1.0)
}

fn ln_pmf(n: u64, j: u64, ln_p: f64, ln_q: f64) -> f64 {
    let mut v = ln_choose(n, j);
    if j > 0 {
        v += j as f64 * ln_p;
    }
    if j < n {
        v += (n - j) as f64 * ln_q;
    }
    v
}

/// Sum of the binomial pmf over `range`, terms evaluated in log space.
fn pmf_sum(n: u64, p: f64, range: core::ops::RangeInclusive<u64>) -> f64 {
    let (ln_p, ln_q) = (libm::log(p), libm::log1p(-p));
    range.map(|j| libm::exp(ln_pmf(n, j, ln_p, ln_q))).sum()
}

/// `P(X <= s)` for `X ~ Binomial(n, p)`, summing the shorter side.
pub fn binomial_cdf(s: u64, n: u64, p: f64) -> f64 {
    if s >= n || p <= 0.0 {
        return 1.0;
    }
    if p >= 1.0 {
        return 0.0;
    }
    if s < n / 2 {
        pmf_sum(n, p, 0..=s).min(1.0)
    } else {
        (1.0 - pmf_sum(n, p, s + 1..=n)).max(0.0)
    }
}

/// `P(X >= s)`.
pub fn binomial_sf(s: u64, n: u64, p: f64) -> f64 {
    if s == 0 {
        1.0
    } else {
        1.0 - binomial_cdf(s - 1, n, p)
    }
}

/// Bisection for the crossing of a monotone function of `p` on `[0, 1]`;
/// `increasing` tells which side of `target` is above.
fn bisect(f: impl Fn(f64) -> f64, target: f64, increasing: bool) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > TOLERANCE {
        let mid = 0.5 * (lo + hi);
        let above = f(mid) > target;
        if above == increasing {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Exact two-sided binomial interval at confidence `level`.
pub fn clopper_pearson(r: &TrialRecord, level: f64) -> Result<ConfidenceInterval> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidParameter("confidence level must lie in (0, 1)"));
    }
    let (s, n) = (r.successes, r.trials);
    let alpha = (1.0 - level) / 2.0;
    let lower = if s == 0 {
        0.0
    } else {
        // P(X >= s) grows with p
        bisect(|p| binomial_sf(s, n, p), alpha, true)
    };
    let upper = if s == n {
        1.0
    } else {
        // P(X <= s) shrinks with p
        bisect(|p| binomial_cdf(s, n, p), alpha, false)
    };
    Ok(ConfidenceInterval {
        lower,
        upper,
        level,
    })
}

/// `[0, 3/N]`, a 95% interval when no success was observed.
pub fn rule_of_three(trials: u64) -> Result<ConfidenceInterval> {
    if trials == 0 {
        return Err(Error::InvalidParameter("need at least one trial"));
    }
    Ok(ConfidenceInterval {
        lower: 0.0,
        upper: (3.0 / trials as f64).min(1.0),
        level: 0.95,
    })
}

/// Number of independent attempts after which success has probability
/// one half: `log(0.5) / log(1 - p)`, and 1 for `p = 1`.
pub fn median_trials(p: f64) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidParameter("probability must lie in (0, 1]"));
    }
    if p == 1.0 {
        return Ok(1.0);
    }
    Ok(core::f64::consts::LN_2 / -libm::log1p(-p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rec(s: u64, n: u64) -> TrialRecord {
        TrialRecord::new(s, n).unwrap()
    }

    #[test]
    fn point_estimates() {
        assert!((point_estimate(&rec(27, 4856)) - 0.00556).abs() < 1e-5);
        assert_eq!(point_estimate(&rec(0, 10)), 0.0);
        assert_eq!(point_estimate(&rec(10, 10)), 1.0);
        assert!(TrialRecord::new(3, 2).is_err());
        assert!(TrialRecord::new(0, 0).is_err());
    }

    #[test]
    fn clopper_pearson_reference_values() {
        let ci = clopper_pearson(&rec(27, 4856), 0.95).unwrap();
        assert!((ci.lower - 0.003667).abs() < 1e-5, "{ci:?}");
        assert!((ci.upper - 0.008079).abs() < 1e-5, "{ci:?}");
        let ci = clopper_pearson(&rec(14, 34650), 0.95).unwrap();
        assert!((ci.lower - 0.0002209).abs() < 1e-6, "{ci:?}");
        assert!((ci.upper - 0.0006778).abs() < 1e-6, "{ci:?}");
    }

    #[test]
    fn bounds_are_beta_quantiles() {
        use statrs::distribution::{Beta, ContinuousCDF};
        for &(s, n) in &[(1u64, 10u64), (5, 20), (27, 4856), (99, 100), (3, 1000)] {
            let ci = clopper_pearson(&rec(s, n), 0.95).unwrap();
            let lo = Beta::new(s as f64, (n - s + 1) as f64).unwrap().cdf(ci.lower);
            let hi = Beta::new((s + 1) as f64, (n - s) as f64).unwrap().cdf(ci.upper);
            assert!((lo - 0.025).abs() < 1e-7, "{s}/{n}: {lo}");
            assert!((hi - 0.975).abs() < 1e-7, "{s}/{n}: {hi}");
        }
        // closed form for a single success
        let ci = clopper_pearson(&rec(1, 10), 0.95).unwrap();
        assert!((ci.lower - (1.0 - libm::pow(0.975, 0.1))).abs() < 1e-9);
    }

    #[test]
    fn edge_records() {
        let ci = clopper_pearson(&rec(0, 50), 0.95).unwrap();
        assert_eq!(ci.lower, 0.0);
        let ci = clopper_pearson(&rec(50, 50), 0.95).unwrap();
        assert_eq!(ci.upper, 1.0);
        assert!(clopper_pearson(&rec(1, 5), 1.0).is_err());
    }

    #[test]
    fn interval_contains_estimate_and_shrinks() {
        let mut prev = f64::INFINITY;
        for n in [100u64, 400, 1600, 6400] {
            let r = rec(n / 50, n);
            let ci = clopper_pearson(&r, 0.95).unwrap();
            assert!(ci.contains(point_estimate(&r)));
            assert!(ci.width() < prev);
            prev = ci.width();
        }
    }

    #[test]
    fn rule_of_three_values_and_conservatism() {
        assert!((rule_of_three(4856).unwrap().upper - 0.000618).abs() < 1e-6);
        assert!(rule_of_three(9900).unwrap().upper <= 0.0003031);
        assert_eq!(rule_of_three(3).unwrap().upper, 1.0);
        // 3/N dominates the one-sided 95% bound, which is the upper end of
        // the two-sided 90% interval; the two-sided 95% bound is wider.
        for n in [3u64, 10, 100, 4856, 9900] {
            let one_sided = clopper_pearson(&rec(0, n), 0.90).unwrap();
            assert!(rule_of_three(n).unwrap().upper >= one_sided.upper);
            let two_sided = clopper_pearson(&rec(0, n), 0.95).unwrap();
            assert!(two_sided.upper > one_sided.upper);
        }
    }

    #[test]
    fn coverage_at_least_nominal() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (p, n, sims) = (0.03, 200u64, 10_000);
        let mut covered = 0;
        for _ in 0..sims {
            let s = (0..n).filter(|_| rng.gen::<f64>() < p).count() as u64;
            if clopper_pearson(&rec(s, n), 0.95).unwrap().contains(p) {
                covered += 1;
            }
        }
        let sigma = (0.95f64 * 0.05 / sims as f64).sqrt();
        assert!(covered as f64 / sims as f64 >= 0.95 - 3.0 * sigma, "{covered}");
    }

    #[test]
    fn median_trial_counts() {
        assert_eq!(median_trials(0.5).unwrap(), 1.0);
        assert_eq!(median_trials(1.0).unwrap(), 1.0);
        let q = median_trials(8.53e-10).unwrap();
        assert!((q / 8.13e8 - 1.0).abs() < 0.005, "{q}");
        // tiny probabilities stay accurate
        let q = median_trials(1e-15).unwrap();
        assert!((q / (core::f64::consts::LN_2 * 1e15) - 1.0).abs() < 1e-9);
        assert!(median_trials(0.0).is_err());
    }
}
