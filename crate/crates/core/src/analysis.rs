//! Security estimates and attacks: brute-force security and its attack,
//! false-accept cost, and the randomized-decoder attack bound.

use alloc::vec::Vec;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};

use crate::classic::{decode_draws, ClassicVault};
use crate::error::{Error, Result};
use crate::field::{Polynomial, SecretDigest, VaultPoint};
use crate::minutiae::MinutiaeTemplate;
use crate::stats::median_trials;

/// Exact binomial coefficient.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::from(0u32);
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// `log2(x)` for a positive big integer, accurate to double precision.
pub fn big_log2(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 64 {
        return libm::log2(x.to_u64().unwrap_or(0) as f64);
    }
    let top = (x >> (bits - 64)).to_u64().unwrap_or(u64::MAX);
    (bits - 64) as f64 + libm::log2(top as f64)
}

fn check_bf(n: u64, t: u64, k: u64) -> Result<()> {
    if k <= t && t <= n {
        Ok(())
    } else {
        Err(Error::InvalidParameter("need k <= t <= n"))
    }
}

/// `num / den` rounded to double precision from the exact quotient.
pub fn ratio_to_f64(num: &BigUint, den: &BigUint) -> f64 {
    let (q, shift) = scaled_quotient(num, den);
    big_to_f64(&q) * libm::exp2(-(shift as f64))
}

fn big_to_f64(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 64 {
        return x.to_u64().unwrap_or(0) as f64;
    }
    let top = (x >> (bits - 64)).to_u64().unwrap_or(u64::MAX);
    top as f64 * libm::exp2((bits - 64) as f64)
}

/// `(num << shift) / den` with enough quotient bits for a double.
fn scaled_quotient(num: &BigUint, den: &BigUint) -> (BigUint, u64) {
    let shift = (den.bits() + 64).saturating_sub(num.bits());
    ((num << shift) / den, shift)
}

/// `log2 bf(n, t, k) = log2(C(n,k) / C(t,k))`.
pub fn log2_bf_security(n: u64, t: u64, k: u64) -> Result<f64> {
    check_bf(n, t, k)?;
    let (q, shift) = scaled_quotient(&binomial(n, k), &binomial(t, k));
    Ok(big_log2(&q) - shift as f64)
}

/// `bf(n, t, k) = C(n,k) / C(t,k)`: the odds against a random `k`-subset of
/// the vault being all genuine.
pub fn bf_security(n: u64, t: u64, k: u64) -> Result<f64> {
    check_bf(n, t, k)?;
    Ok(ratio_to_f64(&binomial(n, k), &binomial(t, k)))
}

/// Median number of random guesses until the brute-force attack succeeds,
/// `log(0.5) / log(1 - 1/bf)`. A vault with `bf = 1` falls on the first guess.
pub fn expected_bf_iterations(n: u64, t: u64, k: u64) -> Result<f64> {
    let bf = bf_security(n, t, k)?;
    if bf <= 1.0 {
        return Ok(1.0);
    }
    median_trials(1.0 / bf)
}

/// Seconds for a false-accept attack to succeed with probability one half
/// when each impostor query costs `idt` seconds and `cores` run in parallel.
pub fn fa_cost(far: f64, idt: f64, cores: usize) -> Result<f64> {
    if !(far > 0.0 && far < 1.0) {
        return Err(Error::InvalidParameter("false-accept rate must lie in (0, 1)"));
    }
    if cores == 0 {
        return Err(Error::InvalidParameter("need at least one core"));
    }
    Ok(median_trials(far)? * idt / cores as f64)
}

/// A protected record exposing its vault points.
pub trait VaultRecord {
    fn vault_points(&self) -> &[VaultPoint];
    fn degree_bound(&self) -> usize;
    fn secret_digest(&self) -> &SecretDigest;
}

impl VaultRecord for ClassicVault {
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

/// Outcome of an offline attack run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttackOutcome {
    pub secret: Option<Polynomial>,
    /// Guesses (or queries) consumed, including the successful one.
    pub iterations: u64,
}

impl AttackOutcome {
    pub fn success(&self) -> bool {
        self.secret.is_some()
    }
}

/// Guess `k` random vault points, interpolate, compare digests; repeat up to
/// `max_iterations` times. Draw `i` uses its own seeded stream, so runs are
/// reproducible and can be split across workers.
pub fn brute_force_attack<V: VaultRecord + ?Sized>(
    vault: &V,
    seed: u64,
    max_iterations: u64,
) -> AttackOutcome {
    match decode_draws(
        vault.vault_points(),
        vault.degree_bound(),
        vault.secret_digest(),
        seed,
        0..max_iterations,
    ) {
        Some((draw, secret)) => AttackOutcome {
            secret: Some(secret),
            iterations: draw + 1,
        },
        None => AttackOutcome {
            secret: None,
            iterations: max_iterations,
        },
    }
}

/// A scheme's verification step, replayed by the false-accept attack.
pub trait Authenticator {
    fn authenticate(&self, query: &MinutiaeTemplate) -> Option<Polynomial>;
}

/// Feeds `queries` to the authenticator in order, without alignment, and
/// stops at the first unlock.
pub fn false_accept_attack<A: Authenticator + ?Sized>(
    auth: &A,
    queries: &[MinutiaeTemplate],
) -> AttackOutcome {
    for (i, q) in queries.iter().enumerate() {
        if let Some(secret) = auth.authenticate(q) {
            return AttackOutcome {
                secret: Some(secret),
                iterations: i as u64 + 1,
            };
        }
    }
    AttackOutcome {
        secret: None,
        iterations: queries.len() as u64,
    }
}

/// False-accept estimate for the randomized decoder and the resulting
/// attack cost in decoder iterations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RandomizedDecoderCost {
    pub far: f64,
    /// `median_trials(far) * D`; infinite when `far = 0`.
    pub cost_iterations: f64,
}

/// `FAR = mean_i p(t_i, omega_i, D)` over impostor unlocking statistics and
/// cost `log(0.5)/log(1 - FAR) * D`.
pub fn fa_cost_randomized_decoder(
    unlock_stats: &[(usize, usize)],
    k: usize,
    d: u64,
) -> Result<RandomizedDecoderCost> {
    if unlock_stats.is_empty() {
        return Err(Error::Empty("unlocking statistics"));
    }
    // FAR and ln(1 - FAR) are both accumulated directly: FAR may be tiny
    // and 1 - FAR may underflow, and the cost needs the logarithm of the
    // latter. ln(mean miss) by log-sum-exp.
    let mut far_sum = 0.0;
    let mut log_miss = Vec::with_capacity(unlock_stats.len());
    for &(t, omega) in unlock_stats {
        far_sum += crate::grid::decode_success_probability(t, omega, k, d)?;
        log_miss.push(crate::grid::log_decode_failure_probability(t, omega, k, d)?);
    }
    let len = unlock_stats.len() as f64;
    let far = far_sum / len;
    let top = log_miss.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let cost_iterations = if far <= 0.0 {
        f64::INFINITY
    } else if top == f64::NEG_INFINITY {
        // every query unlocks: one query of D iterations
        d as f64
    } else {
        let neg_log_miss = if far < 0.5 {
            -libm::log1p(-far)
        } else {
            let sum: f64 = log_miss.iter().map(|&l| libm::exp(l - top)).sum();
            -(top + libm::log(sum / len))
        };
        core::f64::consts::LN_2 / neg_log_miss * d as f64
    };
    Ok(RandomizedDecoderCost {
        far,
        cost_iterations,
    })
}

/// The cheapest configuration of the attack above: one decoder iteration
/// per query.
pub fn fa_cost_lower_bound(unlock_stats: &[(usize, usize)], k: usize) -> Result<RandomizedDecoderCost> {
    fa_cost_randomized_decoder(unlock_stats, k, 1)
}

/// Table rows for the closed-form brute-force security of `(n, t, k)`.
pub fn bf_rows(configs: &[(u64, u64, u64)]) -> Result<Vec<(u64, u64, u64, f64)>> {
    configs
        .iter()
        .map(|&(n, t, k)| Ok((n, t, k, log2_bf_security(n, t, k)?)))
        .collect()
}
