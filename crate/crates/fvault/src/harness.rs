//! FVC-style evaluation: every impression `i < j` of a finger is a genuine
//! attempt (enroll `i`, query `j` aligned by the ground-truth transforms);
//! the first impressions of fingers `I < J` are impostor attempts without
//! alignment.

use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use fvault_core::analysis::{fa_cost_randomized_decoder, RandomizedDecoderCost};
use fvault_core::bch::BinaryCodeSpec;
use fvault_core::classic::{enroll, unlock, ClassicVaultParams};
use fvault_core::descriptor::{enroll_hardened, unlock_hardened, OrdinateCodec};
use fvault_core::field::Polynomial;
use fvault_core::grid::{build_grid, extract_feature_set, grid_enroll, grid_unlock, GridParams};
use fvault_core::minutiae::{RigidTransform, SEPARATION_THRESHOLD};
use fvault_core::stats::{clopper_pearson, rule_of_three, TrialRecord};

use crate::codec::Record;
use crate::derive_seed;
use crate::format::{read_dataset, Dataset, FormatError, Impression};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Core(#[from] fvault_core::Error),
    #[error("{0}")]
    Dataset(String),
}

pub type Result<T> = std::result::Result<T, HarnessError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Classic,
    Descriptor,
    Grid,
}

impl FromStr for Scheme {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "classic" => Ok(Scheme::Classic),
            "descriptor" => Ok(Scheme::Descriptor),
            "grid" => Ok(Scheme::Grid),
            _ => Err(format!("unknown scheme {s:?} (classic, descriptor, grid)")),
        }
    }
}

/// Scheme selector plus every parameter any scheme needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    /// Classic and descriptor vaults.
    pub n: usize,
    pub t_min: usize,
    pub t_max: usize,
    pub k: usize,
    /// BCH code id for the descriptor vault: 1 = (511,19), 2 = (31,6), 3 = (15,5).
    pub code: u8,
    /// Grid vault.
    pub lambda: f64,
    pub s: usize,
    pub grid_t_max: usize,
    pub grid_k: usize,
    /// Randomized decoder iterations (grid).
    pub decoder_iterations: u64,
    /// Exhaustive decoder budget (classic and descriptor); `None` = unbounded.
    pub budget: Option<u64>,
    pub seed: u64,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        let g = GridParams::trained();
        Self {
            scheme: Scheme::Classic,
            n: 224,
            t_min: 18,
            t_max: 24,
            k: 9,
            code: BinaryCodeSpec::BCH_15_5.id(),
            lambda: g.lambda,
            s: g.s,
            grid_t_max: g.t_max,
            grid_k: g.k,
            decoder_iterations: fvault_core::grid::DEFAULT_DECODER_ITERATIONS,
            budget: Some(1 << 16),
            seed: 1,
        }
    }
}

impl SchemeConfig {
    pub fn classic_params(&self) -> ClassicVaultParams {
        ClassicVaultParams {
            n: self.n,
            t_min: self.t_min,
            t_max: self.t_max,
            k: self.k,
            separation_threshold: SEPARATION_THRESHOLD,
            match_threshold: SEPARATION_THRESHOLD,
        }
    }

    pub fn code_spec(&self) -> Result<BinaryCodeSpec> {
        BinaryCodeSpec::from_id(self.code)
            .ok_or_else(|| HarnessError::Dataset(format!("unknown code id {}", self.code)))
    }

    pub fn grid_params(&self, width: u32, height: u32) -> GridParams {
        GridParams {
            lambda: self.lambda,
            s: self.s,
            width,
            height,
            t_max: self.grid_t_max,
            k: self.grid_k,
        }
    }

    /// Degree bound of the active scheme.
    pub fn degree_bound(&self) -> usize {
        match self.scheme {
            Scheme::Grid => self.grid_k,
            _ => self.k,
        }
    }

    pub fn with_k(&self, k: usize) -> Self {
        let mut c = self.clone();
        match c.scheme {
            Scheme::Grid => c.grid_k = k,
            _ => c.k = k,
        }
        c
    }

    /// Descriptor bit length the dataset must carry, if any.
    pub fn descriptor_bits(&self) -> Result<Option<usize>> {
        match self.scheme {
            Scheme::Descriptor => Ok(Some(OrdinateCodec::new(self.code_spec()?)?.word_bits())),
            _ => Ok(None),
        }
    }
}

/// The secret bound to the record of impression `imp` of `finger`.
pub fn enrollment_secret(cfg: &SchemeConfig, finger: usize, imp: usize) -> fvault_core::Result<Polynomial> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[cfg.seed, finger as u64, imp as u64, 1]));
    Polynomial::random(&mut rng, cfg.degree_bound())
}

/// Enrolls one impression under the active scheme. Failures to capture and
/// chaff placement failures come back as errors.
pub fn enroll_impression(
    cfg: &SchemeConfig,
    imp: &Impression,
    secret: &Polynomial,
    seed: u64,
) -> Result<Record> {
    Ok(match cfg.scheme {
        Scheme::Classic => Record::Classic(enroll(&imp.template, &cfg.classic_params(), secret, seed)?),
        Scheme::Descriptor => {
            let described = imp
                .described()
                .ok_or_else(|| HarnessError::Dataset("descriptor scheme needs descriptor files".into()))?;
            Record::Descriptor(enroll_hardened(
                &described,
                &cfg.classic_params(),
                secret,
                cfg.code_spec()?,
                seed,
            )?)
        }
        Scheme::Grid => {
            let g = cfg.grid_params(imp.template.width, imp.template.height);
            Record::Grid(grid_enroll(&imp.template, &g, secret, seed)?)
        }
    })
}

/// One verification: the query is moved by `align`, then decoded.
pub fn verify(
    cfg: &SchemeConfig,
    record: &Record,
    query: &Impression,
    align: &RigidTransform,
    seed: u64,
) -> Result<bool> {
    let template = query.template.transformed(align);
    Ok(match record {
        Record::Classic(v) => unlock(v, &template, cfg.budget).is_recovered(),
        Record::Descriptor(v) => {
            let described = query
                .described()
                .ok_or_else(|| HarnessError::Dataset("descriptor scheme needs descriptor files".into()))?;
            let q = fvault_core::descriptor::DescribedTemplate {
                template,
                descriptors: described.descriptors,
            };
            unlock_hardened(v, &q, cfg.budget)?.is_recovered()
        }
        Record::Grid(v) => grid_unlock(v, &template, cfg.decoder_iterations, seed)?.is_recovered(),
    })
}

/// Alignment taking impression `query` into the frame of `enrolled`.
pub fn ground_truth_alignment(enrolled: &Impression, query: &Impression) -> RigidTransform {
    enrolled.transform.compose(&query.transform.inverse())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rate {
    pub count: u64,
    pub trials: u64,
    pub rate: f64,
}

impl Rate {
    fn new(count: u64, trials: u64) -> Self {
        Self {
            count,
            trials,
            rate: if trials == 0 { 0.0 } else { count as f64 / trials as f64 },
        }
    }
}

/// Mean seconds from query ingestion to accept/reject decision.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub gdt: f64,
    pub idt: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigRow {
    pub k: usize,
    pub gar: Rate,
    pub sub_gar: Rate,
    pub far: Rate,
    /// 95% Clopper-Pearson interval of the FAR, `[0, 3/N]` without false accepts.
    pub far_interval: (f64, f64),
    pub ftcr: Rate,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub timing: Option<Timing>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub config: SchemeConfig,
    pub fingers: usize,
    pub impressions: usize,
    pub gar: Rate,
    pub sub_gar: Rate,
    pub far: Rate,
    pub far_interval: (f64, f64),
    /// Failed enrollments over attempted enrollments.
    pub ftcr: Rate,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub timing: Option<Timing>,
    pub per_config_rows: Vec<ConfigRow>,
}

impl EvaluationReport {
    /// The report without host timings; identical inputs give identical
    /// deterministic reports.
    pub fn deterministic(&self) -> Self {
        let mut r = self.clone();
        r.timing = None;
        for row in &mut r.per_config_rows {
            row.timing = None;
        }
        r
    }

    fn row(&self) -> ConfigRow {
        ConfigRow {
            k: self.config.degree_bound(),
            gar: self.gar,
            sub_gar: self.sub_gar,
            far: self.far,
            far_interval: self.far_interval,
            ftcr: self.ftcr,
            timing: self.timing,
        }
    }
}

fn far_interval(far: &Rate) -> fvault_core::Result<(f64, f64)> {
    if far.trials == 0 {
        return Ok((0.0, 1.0));
    }
    let ci = if far.count == 0 {
        rule_of_three(far.trials)?
    } else {
        clopper_pearson(&TrialRecord::new(far.count, far.trials)?, 0.95)?
    };
    Ok((ci.lower, ci.upper))
}

struct Attempt {
    genuine: bool,
    first_pair: bool,
    accepted: bool,
    seconds: f64,
}

/// Loads `dir` and evaluates `cfg` on it with `cores` workers.
pub fn run_fvc_protocol_dir(dir: &Path, cfg: &SchemeConfig, cores: usize) -> Result<EvaluationReport> {
    let data = read_dataset(dir, cfg.descriptor_bits()?)?;
    run_fvc_protocol(&data, cfg, cores)
}

/// Genuine attempts on records whose enrollment failed are not counted;
/// impostor attempts on them count as rejections, so there are always
/// `C(fingers, 2)` impostor trials.
pub fn run_fvc_protocol(data: &Dataset, cfg: &SchemeConfig, cores: usize) -> Result<EvaluationReport> {
    let fingers = data.fingers.len();
    let imps = data.impressions_per_finger();
    if fingers == 0 || imps == 0 {
        return Err(HarnessError::Dataset("empty dataset".into()));
    }
    // every impression that serves as an enrollment: all but the last of
    // each finger (genuine), and the first (impostor)
    let slots: Vec<(usize, usize)> = (0..fingers)
        .flat_map(|f| (0..imps.saturating_sub(1).max(1)).map(move |i| (f, i)))
        .collect();
    let pool = crate::pool(cores);
    let records: Vec<Option<Record>> = pool.install(|| {
        slots
            .par_iter()
            .map(|&(f, i)| {
                let secret = enrollment_secret(cfg, f, i)?;
                let seed = derive_seed(&[cfg.seed, f as u64, i as u64, 2]);
                match enroll_impression(cfg, &data.fingers[f][i], &secret, seed) {
                    Ok(r) => Ok(Some(r)),
                    Err(HarnessError::Core(
                        fvault_core::Error::FailureToCapture { .. } | fvault_core::Error::ChaffPlacement { .. },
                    )) => Ok(None),
                    Err(e) => Err(e),
                }
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let record = |f: usize, i: usize| records[f * imps.saturating_sub(1).max(1) + i].as_ref();

    let mut jobs: Vec<(usize, usize, usize, usize)> = Vec::new();
    for f in 0..fingers {
        for i in 0..imps {
            for j in i + 1..imps {
                jobs.push((f, i, f, j));
            }
        }
    }
    for fi in 0..fingers {
        for fj in fi + 1..fingers {
            jobs.push((fi, 0, fj, 0));
        }
    }
    let attempts: Vec<Option<Attempt>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(fa, ia, fb, ib)| {
                let genuine = fa == fb;
                let Some(rec) = record(fa, ia) else {
                    // failed enrollment
                    return Ok((!genuine).then_some(Attempt {
                        genuine,
                        first_pair: false,
                        accepted: false,
                        seconds: 0.0,
                    }));
                };
                let (enrolled, query) = (&data.fingers[fa][ia], &data.fingers[fb][ib]);
                let align = if genuine {
                    ground_truth_alignment(enrolled, query)
                } else {
                    RigidTransform::IDENTITY
                };
                let seed = derive_seed(&[cfg.seed, fa as u64, ia as u64, fb as u64, ib as u64, 3]);
                let start = Instant::now();
                let accepted = verify(cfg, rec, query, &align, seed)?;
                Ok(Some(Attempt {
                    genuine,
                    first_pair: genuine && ia == 0 && ib == 1,
                    accepted,
                    seconds: start.elapsed().as_secs_f64(),
                }))
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let (mut ga, mut gt, mut sa, mut st, mut fa, mut ft) = (0u64, 0u64, 0u64, 0u64, 0u64, 0u64);
    let (mut gsec, mut isec, mut icount) = (0.0, 0.0, 0u64);
    for a in attempts.iter().flatten() {
        if a.genuine {
            gt += 1;
            ga += a.accepted as u64;
            gsec += a.seconds;
            if a.first_pair {
                st += 1;
                sa += a.accepted as u64;
            }
        } else {
            ft += 1;
            fa += a.accepted as u64;
            if a.seconds > 0.0 {
                isec += a.seconds;
                icount += 1;
            }
        }
    }
    let failed = records.iter().filter(|r| r.is_none()).count() as u64;
    let far = Rate::new(fa, ft);
    let mut report = EvaluationReport {
        config: cfg.clone(),
        fingers,
        impressions: imps,
        gar: Rate::new(ga, gt),
        sub_gar: Rate::new(sa, st),
        far,
        far_interval: far_interval(&far)?,
        ftcr: Rate::new(failed, records.len() as u64),
        timing: Some(Timing {
            gdt: if gt > 0 { gsec / gt as f64 } else { 0.0 },
            idt: if icount > 0 { isec / icount as f64 } else { 0.0 },
        }),
        per_config_rows: Vec::new(),
    };
    report.per_config_rows.push(report.row());
    Ok(report)
}

/// One evaluation per degree bound; the returned report is the first one
/// with every row attached.
pub fn run_fvc_sweep(data: &Dataset, cfg: &SchemeConfig, ks: &[usize], cores: usize) -> Result<EvaluationReport> {
    let mut out: Option<EvaluationReport> = None;
    for &k in ks {
        let r = run_fvc_protocol(data, &cfg.with_k(k), cores)?;
        match &mut out {
            None => out = Some(r),
            Some(first) => first.per_config_rows.push(r.row()),
        }
    }
    out.ok_or_else(|| HarnessError::Dataset("no degree bounds given".into()))
}

/// Per impostor pair of first impressions `I < J`: `t = |B|` and
/// `omega = |A ∩ B|` of the grid feature sets, no alignment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnlockingStats {
    pub lambda: f64,
    pub s: usize,
    pub t_max: usize,
    pub vault_size: usize,
    pub pairs: Vec<(usize, usize)>,
    pub stats: Vec<(usize, usize)>,
}

pub fn run_unlocking_stats(data: &Dataset, cfg: &SchemeConfig) -> Result<UnlockingStats> {
    let first: Vec<&Impression> = data
        .fingers
        .iter()
        .map(|f| f.first().ok_or_else(|| HarnessError::Dataset("finger without impressions".into())))
        .collect::<Result<_>>()?;
    let t0 = &first.first().ok_or_else(|| HarnessError::Dataset("empty dataset".into()))?.template;
    let params = cfg.grid_params(t0.width, t0.height);
    let grid = build_grid(params.lambda, params.width, params.height)?;
    params.validate()?;
    let sets: Vec<_> = first
        .iter()
        .map(|i| extract_feature_set(&i.template, &grid, params.s, params.t_max))
        .collect();
    let (mut pairs, mut stats) = (Vec::new(), Vec::new());
    for a in 0..sets.len() {
        for b in a + 1..sets.len() {
            pairs.push((a, b));
            stats.push((sets[b].len(), sets[a].intersection_size(&sets[b])));
        }
    }
    Ok(UnlockingStats {
        lambda: params.lambda,
        s: params.s,
        t_max: params.t_max,
        vault_size: grid.len() * params.s,
        pairs,
        stats,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostRow {
    pub k: usize,
    pub d: u64,
    pub far: f64,
    pub cost_iterations: f64,
}

/// False-accept rate and attack cost, per `k` and decoder iteration count.
pub fn unlocking_cost_table(stats: &[(usize, usize)], ks: &[usize], ds: &[u64]) -> Result<Vec<CostRow>> {
    let mut rows = Vec::new();
    for &k in ks {
        for &d in ds {
            let RandomizedDecoderCost { far, cost_iterations } = fa_cost_randomized_decoder(stats, k, d)?;
            rows.push(CostRow {
                k,
                d,
                far,
                cost_iterations,
            });
        }
    }
    Ok(rows)
}
