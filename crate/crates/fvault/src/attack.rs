//! Timed, multi-core drivers for the offline attacks. Results do not depend
//! on the number of cores: work is split into fixed chunks and the lowest
//! successful index wins.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use fvault_core::analysis::VaultRecord;
use fvault_core::classic::{decode_draws, ClassicVault, Decoded};
use fvault_core::correlation::{correlation_attack, CorrelationAttackConfig};
use fvault_core::field::Polynomial;
use fvault_core::minutiae::RigidTransform;

use crate::codec::Record;
use crate::format::Impression;
use crate::harness::{verify, SchemeConfig};

/// Draws handed to one worker at a time.
pub const CHUNK: u64 = 1 << 12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    pub attack: String,
    pub success: bool,
    /// Guesses, queries or decoder iterations consumed.
    pub iterations: u64,
    pub seconds: f64,
    pub iterations_per_second: f64,
    /// Recovered coefficients, hex, lowest degree first.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub secret: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub score: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub cross_match: Option<bool>,
}

impl AttackReport {
    fn new(attack: &str, secret: Option<&Polynomial>, iterations: u64, seconds: f64) -> Self {
        Self {
            attack: attack.into(),
            success: secret.is_some(),
            iterations,
            seconds,
            iterations_per_second: if seconds > 0.0 { iterations as f64 / seconds } else { 0.0 },
            secret: secret.map(|p| hex::encode(p.to_bytes())),
            score: None,
            cross_match: None,
        }
    }
}

/// Random-subset brute force over `max_iterations` draws, split over
/// `cores` workers. Same outcome as the single-threaded
/// [`fvault_core::analysis::brute_force_attack`] with equal seed.
pub fn brute_force<V: VaultRecord + Sync + ?Sized>(
    vault: &V,
    seed: u64,
    max_iterations: u64,
    cores: usize,
) -> AttackReport {
    let start = Instant::now();
    let pool = crate::pool(cores);
    let batch = CHUNK * cores.max(1) as u64;
    let mut found = None;
    let mut next = 0u64;
    while next < max_iterations && found.is_none() {
        let end = next.saturating_add(batch).min(max_iterations);
        let chunks: Vec<std::ops::Range<u64>> = (next..end)
            .step_by(CHUNK as usize)
            .map(|s| s..(s + CHUNK).min(end))
            .collect();
        found = pool.install(|| {
            chunks
                .par_iter()
                .filter_map(|r| {
                    decode_draws(
                        vault.vault_points(),
                        vault.degree_bound(),
                        vault.secret_digest(),
                        seed,
                        r.clone(),
                    )
                })
                .min_by_key(|(draw, _)| *draw)
        });
        next = end;
    }
    let secs = start.elapsed().as_secs_f64();
    match found {
        Some((draw, poly)) => AttackReport::new("brute-force", Some(&poly), draw + 1, secs),
        None => AttackReport::new("brute-force", None, max_iterations, secs),
    }
}

impl VaultRecord for Record {
    fn vault_points(&self) -> &[fvault_core::field::VaultPoint] {
        match self {
            Record::Classic(v) => v.vault_points(),
            Record::Grid(v) => v.vault_points(),
            // the ordinates are masked; a guess must also unmask
            Record::Descriptor(_) => &[],
        }
    }
    fn degree_bound(&self) -> usize {
        match self {
            Record::Classic(v) => v.params.k,
            Record::Descriptor(v) => v.params.k,
            Record::Grid(v) => v.params.k,
        }
    }
    fn secret_digest(&self) -> &fvault_core::field::SecretDigest {
        match self {
            Record::Classic(v) => &v.digest,
            Record::Descriptor(v) => &v.digest,
            Record::Grid(v) => &v.digest,
        }
    }
}

/// Replays verification with each query in order, unaligned, until one
/// unlocks the record.
pub fn false_accept(
    cfg: &SchemeConfig,
    record: &Record,
    queries: &[Impression],
    cores: usize,
) -> crate::harness::Result<AttackReport> {
    let start = Instant::now();
    let pool = crate::pool(cores);
    let batch = cores.max(1);
    let mut hit = None;
    for (b, chunk) in queries.chunks(batch).enumerate() {
        let r = pool.install(|| {
            chunk
                .par_iter()
                .enumerate()
                .map(|(i, q)| {
                    let idx = b * batch + i;
                    let seed = crate::derive_seed(&[cfg.seed, idx as u64, 5]);
                    verify(cfg, record, q, &RigidTransform::IDENTITY, seed).map(|ok| ok.then_some(idx))
                })
                .collect::<crate::harness::Result<Vec<_>>>()
        })?;
        if let Some(idx) = r.into_iter().flatten().min() {
            hit = Some(idx);
            break;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let mut rep = AttackReport::new(
        "false-accept",
        None,
        hit.map_or(queries.len() as u64, |i| i as u64 + 1),
        secs,
    );
    rep.success = hit.is_some();
    Ok(rep)
}

/// Cross-matches two classic records and decodes the first from the
/// correlated candidates.
pub fn correlate(a: &ClassicVault, b: &ClassicVault, cfg: &CorrelationAttackConfig) -> AttackReport {
    let start = Instant::now();
    let (result, decoded) = correlation_attack(a, b, cfg);
    let secs = start.elapsed().as_secs_f64();
    let secret = match &decoded {
        Decoded::Recovered { secret, .. } => Some(secret),
        Decoded::Rejected { .. } => None,
    };
    let mut rep = AttackReport::new("correlation", secret, decoded.iterations(), secs);
    rep.score = Some(result.score);
    rep.cross_match = Some(result.cross_match);
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use fvault_core::analysis::brute_force_attack;
    use fvault_core::classic::{enroll, ClassicVaultParams};
    use fvault_core::minutiae::synthesize_finger;
    use rand::SeedableRng;

    #[test]
    fn parallel_brute_force_matches_sequential() {
        let params = ClassicVaultParams {
            n: 20,
            t_min: 8,
            t_max: 8,
            k: 3,
            ..ClassicVaultParams::reference(3)
        };
        for seed in 0..5u64 {
            let f = synthesize_finger(seed, 12, 296, 560, 30.0).unwrap();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let secret = Polynomial::random(&mut rng, 3).unwrap();
            let v = enroll(&f, &params, &secret, seed).unwrap();
            let seq = brute_force_attack(&v, seed + 100, 50_000);
            for cores in [1, 3] {
                let par = brute_force(&v, seed + 100, 50_000, cores);
                assert_eq!(par.success, seq.success());
                assert_eq!(par.iterations, seq.iterations);
            }
        }
    }
}
