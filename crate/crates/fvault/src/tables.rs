//! Closed-form security and attack-cost tables, each next to the value
//! published for it in the fuzzy vault literature.

use std::fmt::Write as _;

use serde::Serialize;

use fvault_core::analysis::{expected_bf_iterations, fa_cost, log2_bf_security};
use fvault_core::bch::BinaryCodeSpec;
use fvault_core::descriptor::{log2_hardened_bf_security, DESCRIPTOR_GUESS_DIFFICULTY};
use fvault_core::stats::{clopper_pearson, median_trials, point_estimate, rule_of_three, TrialRecord};

/// Cores assumed by the published attack timings.
pub const PUBLISHED_CORES: usize = 4;

/// `(source, n, t, k, iterations per second per core, published log2 security)`.
pub const BRUTE_FORCE_CONFIGS: [(&str, u64, u64, u64, f64, f64); 7] = [
    ("Uludag et al. 2005", 218, 18, 9, 151_316.5, 36.0),
    ("Uludag, Jain 2006", 224, 24, 9, 148_634.1, 31.0),
    ("Nandakumar et al. 2007", 224, 24, 8, 183_188.8, 27.0),
    ("Nandakumar et al. 2007", 224, 24, 9, 148_634.1, 31.0),
    ("Nandakumar et al. 2007", 224, 24, 11, 109_066.9, 39.0),
    ("Li et al. 2008", 440, 40, 13, 82_056.84, 48.0),
    ("Li et al. 2008", 440, 40, 14, 69_227.56, 52.0),
];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BruteForceRow {
    pub source: &'static str,
    pub n: u64,
    pub t: u64,
    pub k: u64,
    pub log2_security: f64,
    pub published_log2: f64,
    /// Median number of guesses until success.
    pub expected_iterations: f64,
    pub iterations_per_second: f64,
    pub expected_seconds: f64,
}

pub fn brute_force_table(cores: usize) -> fvault_core::Result<Vec<BruteForceRow>> {
    BRUTE_FORCE_CONFIGS
        .iter()
        .map(|&(source, n, t, k, ips, published_log2)| {
            let it = expected_bf_iterations(n, t, k)?;
            Ok(BruteForceRow {
                source,
                n,
                t,
                k,
                log2_security: log2_bf_security(n, t, k)?,
                published_log2,
                expected_iterations: it,
                iterations_per_second: ips,
                expected_seconds: it / (ips * cores.max(1) as f64),
            })
        })
        .collect()
}

/// Published log2 securities of the descriptor-hardened vault (224, 24, k).
pub const HARDENED_PUBLISHED: [(BinaryCodeSpec, [(u64, f64); 6]); 3] = [
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

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HardenedRow {
    pub code: String,
    pub k: u64,
    pub log2_security: f64,
    pub published_log2: f64,
}

pub fn hardened_table() -> fvault_core::Result<Vec<HardenedRow>> {
    let mut rows = Vec::new();
    for (code, cells) in HARDENED_PUBLISHED {
        for (k, published_log2) in cells {
            rows.push(HardenedRow {
                code: format!("BCH({},{})", code.m, code.ell),
                k,
                log2_security: log2_hardened_bf_security(224, 24, k, DESCRIPTOR_GUESS_DIFFICULTY, &code)?,
                published_log2,
            });
        }
    }
    Ok(rows)
}

/// `(k, false accepts, impostor attempts, mean impostor decoding seconds)`
/// measured for the classic vault (224, 24, k).
pub const FALSE_ACCEPT_OBSERVATIONS: [(u64, u64, u64, f64); 6] = [
    (7, 188, 4856, 0.08),
    (8, 79, 4856, 0.140),
    (9, 27, 4856, 0.198),
    (10, 8, 4856, 0.240),
    (11, 5, 4856, 0.248),
    (12, 0, 4856, 0.193),
];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FalseAcceptRow {
    pub k: u64,
    pub false_accepts: u64,
    pub attempts: u64,
    pub far: f64,
    pub idt: f64,
    /// 95% Clopper-Pearson interval, or `[0, 3/N]` without false accepts.
    pub interval: (f64, f64),
    /// Attack time at the upper and lower end of the interval; the upper
    /// time is infinite when no false accept was seen.
    pub seconds: (f64, f64),
    pub brute_force_iterations: f64,
}

pub fn false_accept_table(cores: usize) -> fvault_core::Result<Vec<FalseAcceptRow>> {
    FALSE_ACCEPT_OBSERVATIONS
        .iter()
        .map(|&(k, s, n, idt)| {
            let rec = TrialRecord::new(s, n)?;
            let ci = if s == 0 {
                rule_of_three(n)?
            } else {
                clopper_pearson(&rec, 0.95)?
            };
            let slow = if ci.lower > 0.0 {
                fa_cost(ci.lower, idt, cores)?
            } else {
                f64::INFINITY
            };
            Ok(FalseAcceptRow {
                k,
                false_accepts: s,
                attempts: n,
                far: point_estimate(&rec),
                idt,
                interval: (ci.lower, ci.upper),
                seconds: (fa_cost(ci.upper, idt, cores)?, slow),
                brute_force_iterations: expected_bf_iterations(224, 24, k)?,
            })
        })
        .collect()
}

/// `(k, single-iteration FAR, seconds per 2^16 decoder iterations)` of the
/// grid vault (1452, 44, k).
pub const GRID_FAR_OBSERVATIONS: [(u64, f64, f64); 6] = [
    (7, 8.31e-8, 0.28),
    (8, 8.87e-9, 0.35),
    (9, 8.53e-10, 0.41),
    (10, 6.95e-11, 0.51),
    (11, 4.40e-12, 0.60),
    (12, 1.86e-13, 0.73),
];

/// Published attack times in seconds (four cores).
pub const GRID_PUBLISHED_SECONDS: [f64; 6] = [
    36.0,
    2.0 * 60.0,
    21.0 * 60.0,
    5.0 * 3600.0,
    4.0 * 86_400.0,
    120.0 * 86_400.0,
];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridCostRow {
    pub k: u64,
    pub far: f64,
    /// Single-iteration queries until success has probability 1/2.
    pub queries: f64,
    pub seconds_per_block: f64,
    pub block: u64,
    pub seconds: f64,
    pub published_seconds: f64,
}

/// Cost of the false-accept attack on the grid vault from a FAR column:
/// `median_trials(FAR)` single-iteration queries, timed in blocks of
/// `block` iterations.
pub fn grid_cost_table(cores: usize, block: u64) -> fvault_core::Result<Vec<GridCostRow>> {
    GRID_FAR_OBSERVATIONS
        .iter()
        .zip(GRID_PUBLISHED_SECONDS)
        .map(|(&(k, far, per_block), published_seconds)| {
            let queries = median_trials(far)?;
            Ok(GridCostRow {
                k,
                far,
                queries,
                seconds_per_block: per_block,
                block,
                seconds: queries / block as f64 * per_block / cores.max(1) as f64,
                published_seconds,
            })
        })
        .collect()
}

/// Human-readable duration: seconds, minutes, hours, days or years.
pub fn duration(seconds: f64) -> String {
    if !seconds.is_finite() {
        return "inf".into();
    }
    const UNITS: [(f64, &str); 5] = [
        (365.25 * 86_400.0, "years"),
        (86_400.0, "days"),
        (3600.0, "hours"),
        (60.0, "min"),
        (1.0, "sec"),
    ];
    for (scale, unit) in UNITS {
        if seconds >= scale {
            return format!("{:.3} {unit}", seconds / scale);
        }
    }
    format!("{seconds:.3} sec")
}

fn pct(p: f64) -> String {
    format!("{:.4}%", p * 100.0)
}

pub fn render_brute_force(rows: &[BruteForceRow]) -> String {
    let mut s = format!(
        "{:<24} {:>15} {:>9} {:>9} {:>14} {:>14}\n",
        "source", "(n,t,k)", "log2 bf", "published", "iter/s/core", "expected time"
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{:<24} {:>15} {:>9.3} {:>9} {:>14.1} {:>14}",
            r.source,
            format!("({},{},{})", r.n, r.t, r.k),
            r.log2_security,
            format!("2^{}", r.published_log2),
            r.iterations_per_second,
            duration(r.expected_seconds)
        );
    }
    s
}

pub fn render_hardened(rows: &[HardenedRow]) -> String {
    let mut s = format!("{:<12} {:>4} {:>9} {:>9}\n", "code", "k", "log2", "published");
    for r in rows {
        let _ = writeln!(
            s,
            "{:<12} {:>4} {:>9.3} {:>9}",
            r.code,
            r.k,
            r.log2_security,
            format!("2^{}", r.published_log2)
        );
    }
    s
}

pub fn render_false_accept(rows: &[FalseAcceptRow]) -> String {
    let mut s = format!(
        "{:>3} {:>11} {:>9} {:>10} {:>22} {:>30} {:>12}\n",
        "k", "FAR*", "", "IDT", "95% interval", "false-accept attack", "log2 bf it"
    );
    for r in rows {
        let time = if r.seconds.1.is_finite() {
            format!("{} .. {}", duration(r.seconds.0), duration(r.seconds.1))
        } else {
            format!("> {}", duration(r.seconds.0))
        };
        let _ = writeln!(
            s,
            "{:>3} {:>11} {:>9} {:>10} {:>22} {:>30} {:>12.2}",
            r.k,
            format!("{}/{}", r.false_accepts, r.attempts),
            pct(r.far),
            format!("{} sec", r.idt),
            format!("[{}, {}]", pct(r.interval.0), pct(r.interval.1)),
            time,
            r.brute_force_iterations.log2()
        );
    }
    s
}

pub fn render_grid_cost(rows: &[GridCostRow]) -> String {
    let mut s = format!(
        "{:>3} {:>12} {:>12} {:>16} {:>16}\n",
        "k", "FAR", "queries", "attack time", "published"
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{:>3} {:>12.3e} {:>12.3e} {:>16} {:>16}",
            r.k,
            r.far,
            r.queries,
            duration(r.seconds),
            duration(r.published_seconds)
        );
    }
    s
}
