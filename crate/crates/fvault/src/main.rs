use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use fvault::codec::Record;
use fvault::format::{read_dataset, read_described, read_template, read_transform, write_dataset, Impression};
use fvault::harness::{self, Scheme, SchemeConfig};
use fvault::synth::{synthesize_dataset, SynthConfig};
use fvault::{attack, tables};
use fvault_core::analysis::fa_cost;
use fvault_core::correlation::{CorrelationAttackConfig, CorrelationConfig};
use fvault_core::descriptor::OrdinateCodec;
use fvault_core::field::Polynomial;
use fvault_core::grid::{train_parameters, SearchSpace};
use fvault_core::minutiae::RigidTransform;
use fvault_core::stats::{clopper_pearson, median_trials, point_estimate, rule_of_three, TrialRecord};

#[derive(Parser)]
#[command(name = "fvault", version, about = "Fuzzy vault toolkit: enroll, verify, evaluate, attack")]
struct Cli {
    /// Print JSON instead of aligned text.
    #[arg(long, global = true)]
    json: bool,
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Worker threads.
    #[arg(long, global = true, env = "FVAULT_CORES", default_value_t = 1)]
    cores: usize,
    /// Decoder iteration budget (exhaustive decoders, brute force).
    #[arg(long, global = true)]
    budget: Option<u64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic dataset directory.
    Synth(SynthArgs),
    /// Protect a template and write the record.
    Enroll(EnrollArgs),
    /// Unlock a record with a query template.
    Verify(VerifyArgs),
    /// FVC-protocol evaluation of a dataset.
    Eval(EvalArgs),
    #[command(subcommand)]
    Attack(AttackCmd),
    /// Sweep grid-vault parameters on a training dataset.
    TrainGrid(TrainArgs),
    /// Impostor unlocking statistics and false-accept cost of the grid vault.
    UnlockStats(UnlockArgs),
    #[command(subcommand)]
    Stats(StatsCmd),
    /// Closed-form security and cost tables.
    Tables {
        /// 2: brute force, 3: descriptor-hardened, 4: false accept, 5: grid false accept.
        #[arg(long, value_parser = clap::value_parser!(u8).range(2..=5))]
        table: u8,
    },
}

#[derive(Args, Clone)]
struct SchemeArgs {
    #[arg(long, default_value = "classic")]
    scheme: Scheme,
    /// Polynomial degree bound of the active scheme.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 224)]
    n: usize,
    #[arg(long, default_value_t = 18)]
    t_min: usize,
    #[arg(long, default_value_t = 24)]
    t_max: usize,
    /// Descriptor BCH code: 1 = (511,19), 2 = (31,6), 3 = (15,5).
    #[arg(long, default_value_t = 3)]
    code: u8,
    #[arg(long, default_value_t = 29.0)]
    lambda: f64,
    #[arg(long, default_value_t = 6)]
    s: usize,
    #[arg(long, default_value_t = 44)]
    grid_t_max: usize,
    /// Randomized decoder iterations.
    #[arg(long, default_value_t = 1 << 16)]
    d: u64,
}

impl SchemeArgs {
    fn config(&self, cli: &Cli) -> SchemeConfig {
        let base = SchemeConfig {
            scheme: self.scheme,
            n: self.n,
            t_min: self.t_min,
            t_max: self.t_max,
            code: self.code,
            lambda: self.lambda,
            s: self.s,
            grid_t_max: self.grid_t_max,
            decoder_iterations: self.d,
            budget: cli.budget.or(SchemeConfig::default().budget),
            seed: cli.seed,
            ..SchemeConfig::default()
        };
        match self.k {
            Some(k) => base.with_k(k),
            None => base,
        }
    }
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 10)]
    fingers: usize,
    #[arg(long, default_value_t = 8)]
    impressions: usize,
    /// Impressions identical to their master.
    #[arg(long)]
    zero_noise: bool,
    /// Write descriptor sidecars sized for this BCH code id.
    #[arg(long)]
    descriptor_code: Option<u8>,
    #[arg(long, default_value_t = 0)]
    descriptor_flips: usize,
}

#[derive(Args)]
struct EnrollArgs {
    #[arg(long)]
    template: PathBuf,
    /// Descriptor sidecar (descriptor scheme).
    #[arg(long)]
    descriptors: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    scheme: SchemeArgs,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    vault: PathBuf,
    #[arg(long)]
    template: PathBuf,
    #[arg(long)]
    descriptors: Option<PathBuf>,
    /// Alignment applied to the query first (`dx dy rotation cx cy`).
    #[arg(long)]
    align: Option<PathBuf>,
    #[arg(long, default_value_t = 1 << 16)]
    d: u64,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[command(flatten)]
    scheme: SchemeArgs,
    /// Evaluate several degree bounds, e.g. `7,8,9`.
    #[arg(long, value_delimiter = ',')]
    ks: Vec<usize>,
}

#[derive(Subcommand)]
enum AttackCmd {
    /// Random-subset brute force against a record.
    Bf {
        #[arg(long)]
        vault: PathBuf,
    },
    /// Replay the first impression of every dataset finger as a query.
    Fa {
        #[arg(long)]
        vault: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value_t = 1 << 16)]
        d: u64,
    },
    /// Cross-match two classic records and decode the first.
    Correlate {
        #[arg(long)]
        vault_a: PathBuf,
        #[arg(long)]
        vault_b: PathBuf,
        #[arg(long, default_value_t = CorrelationConfig::default().pair_radius)]
        radius: f64,
        #[arg(long, default_value_t = CorrelationConfig::default().threshold)]
        threshold: usize,
    },
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = [24.0, 26.0, 29.0, 32.0])]
    lambdas: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [4usize, 6, 8])]
    s: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [36usize, 44, 52])]
    t_max: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    k: Vec<usize>,
}

#[derive(Args)]
struct UnlockArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[command(flatten)]
    scheme: SchemeArgs,
    #[arg(long, value_delimiter = ',', default_values_t = [7usize, 8, 9, 10, 11, 12])]
    ks: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [1u64, 65536])]
    ds: Vec<u64>,
}

#[derive(Subcommand)]
enum StatsCmd {
    /// Clopper-Pearson interval for `s` successes in `n` trials.
    Ci {
        #[arg(long)]
        s: u64,
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 0.95)]
        level: f64,
        /// Seconds per impostor query, to price a false-accept attack.
        #[arg(long)]
        idt: Option<f64>,
    },
    /// Rule-of-three bound after `n` trials without success.
    Rot {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        idt: Option<f64>,
    },
}

/// Outcome of a command: the value to print and whether it succeeded.
struct Outcome {
    json: serde_json::Value,
    text: String,
    ok: bool,
}

impl Outcome {
    fn new<T: Serialize>(value: &T, text: String, ok: bool) -> Result<Self> {
        Ok(Self {
            json: serde_json::to_value(value)?,
            text,
            ok,
        })
    }
}

fn load_record(path: &Path) -> Result<Record> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Record::from_bytes(&bytes).with_context(|| format!("decoding {}", path.display()))
}

fn query_impression(
    template: &Path,
    descriptors: Option<&Path>,
    descriptor_bits: Option<usize>,
) -> Result<Impression> {
    Ok(match (descriptors, descriptor_bits) {
        (Some(d), Some(len)) => {
            let dt = read_described(template, d, len)?;
            Impression {
                template: dt.template,
                transform: RigidTransform::IDENTITY,
                descriptors: Some(dt.descriptors),
            }
        }
        (None, Some(_)) => bail!("a descriptor record needs --descriptors"),
        _ => Impression {
            template: read_template(template)?,
            transform: RigidTransform::IDENTITY,
            descriptors: None,
        },
    })
}

fn record_config(rec: &Record, cli: &Cli, d: u64) -> SchemeConfig {
    let mut cfg = SchemeConfig {
        budget: cli.budget.or(SchemeConfig::default().budget),
        seed: cli.seed,
        decoder_iterations: d,
        ..SchemeConfig::default()
    };
    match rec {
        Record::Classic(v) => {
            cfg.scheme = Scheme::Classic;
            cfg.k = v.params.k;
        }
        Record::Descriptor(v) => {
            cfg.scheme = Scheme::Descriptor;
            cfg.k = v.params.k;
            cfg.code = v.code.id();
        }
        Record::Grid(v) => {
            cfg.scheme = Scheme::Grid;
            cfg.grid_k = v.params.k;
        }
    }
    cfg
}

fn run(cli: &Cli) -> Result<Outcome> {
    match &cli.cmd {
        Cmd::Synth(a) => {
            let mut cfg = if a.zero_noise {
                SynthConfig::zero_noise(a.fingers, a.impressions, cli.seed)
            } else {
                SynthConfig {
                    fingers: a.fingers,
                    impressions: a.impressions,
                    seed: cli.seed,
                    ..SynthConfig::default()
                }
            };
            if let Some(id) = a.descriptor_code {
                let spec = fvault_core::bch::BinaryCodeSpec::from_id(id).context("unknown code id")?;
                cfg.descriptor_bits = Some(OrdinateCodec::new(spec)?.word_bits());
                cfg.descriptor_flips = a.descriptor_flips;
            }
            let data = synthesize_dataset(&cfg)?;
            write_dataset(&a.out, &data)?;
            let text = format!(
                "wrote {} fingers x {} impressions to {}\n",
                a.fingers,
                a.impressions,
                a.out.display()
            );
            Outcome::new(&cfg, text, true)
        }
        Cmd::Enroll(a) => {
            let cfg = a.scheme.config(cli);
            let imp = query_impression(&a.template, a.descriptors.as_deref(), cfg.descriptor_bits()?)?;
            let mut rng = ChaCha8Rng::seed_from_u64(fvault::derive_seed(&[cli.seed, 0x5ec]));
            let secret = Polynomial::random(&mut rng, cfg.degree_bound())?;
            let rec = harness::enroll_impression(&cfg, &imp, &secret, cli.seed)?;
            std::fs::write(&a.out, rec.to_bytes()).with_context(|| format!("writing {}", a.out.display()))?;
            #[derive(Serialize)]
            struct Enrolled {
                scheme: &'static str,
                out: PathBuf,
                secret: String,
                digest: String,
            }
            let e = Enrolled {
                scheme: rec.kind(),
                out: a.out.clone(),
                secret: hex::encode(secret.to_bytes()),
                digest: secret.digest().to_string(),
            };
            let text = format!("{} record -> {}\nsecret {}\ndigest {}\n", e.scheme, a.out.display(), e.secret, e.digest);
            Outcome::new(&e, text, true)
        }
        Cmd::Verify(a) => {
            let rec = load_record(&a.vault)?;
            let cfg = record_config(&rec, cli, a.d);
            let bits = match &rec {
                Record::Descriptor(v) => Some(v.codec()?.word_bits()),
                _ => None,
            };
            let imp = query_impression(&a.template, a.descriptors.as_deref(), bits)?;
            let align = match &a.align {
                Some(p) => read_transform(p)?,
                None => RigidTransform::IDENTITY,
            };
            let start = std::time::Instant::now();
            let ok = harness::verify(&cfg, &rec, &imp, &align, cli.seed)?;
            #[derive(Serialize)]
            struct Verified {
                accepted: bool,
                seconds: f64,
            }
            let v = Verified {
                accepted: ok,
                seconds: start.elapsed().as_secs_f64(),
            };
            let text = format!("{}\n", if ok { "accepted" } else { "rejected" });
            Outcome::new(&v, text, ok)
        }
        Cmd::Eval(a) => {
            let cfg = a.scheme.config(cli);
            let data = read_dataset(&a.dataset, cfg.descriptor_bits()?)?;
            let report = if a.ks.is_empty() {
                harness::run_fvc_protocol(&data, &cfg, cli.cores)?
            } else {
                harness::run_fvc_sweep(&data, &cfg, &a.ks, cli.cores)?
            };
            let mut text = format!(
                "{:>4} {:>22} {:>18} {:>20} {:>26} {:>10} {:>10} {:>10}\n",
                "k", "GAR", "sub-GAR", "FAR", "FAR 95%", "FTCR", "GDT s", "IDT s"
            );
            for r in &report.per_config_rows {
                let t = r.timing.unwrap_or(harness::Timing { gdt: 0.0, idt: 0.0 });
                text.push_str(&format!(
                    "{:>4} {:>22} {:>18} {:>20} {:>26} {:>10} {:>10.4} {:>10.4}\n",
                    r.k,
                    format!("{:.2}% ({}/{})", r.gar.rate * 100.0, r.gar.count, r.gar.trials),
                    format!("{:.2}% ({}/{})", r.sub_gar.rate * 100.0, r.sub_gar.count, r.sub_gar.trials),
                    format!("{:.3}% ({}/{})", r.far.rate * 100.0, r.far.count, r.far.trials),
                    format!("[{:.3}%, {:.3}%]", r.far_interval.0 * 100.0, r.far_interval.1 * 100.0),
                    format!("{:.2}%", r.ftcr.rate * 100.0),
                    t.gdt,
                    t.idt
                ));
            }
            Outcome::new(&report, text, true)
        }
        Cmd::Attack(AttackCmd::Bf { vault }) => {
            let rec = load_record(vault)?;
            if let Record::Descriptor(_) = rec {
                bail!("brute force needs plain ordinates; descriptor records are not supported");
            }
            let max = cli.budget.unwrap_or(1 << 24);
            let rep = attack::brute_force(&rec, cli.seed, max, cli.cores);
            Outcome::new(&rep, attack_text(&rep), rep.success)
        }
        Cmd::Attack(AttackCmd::Fa { vault, dataset, d }) => {
            let rec = load_record(vault)?;
            let cfg = record_config(&rec, cli, *d);
            let data = read_dataset(dataset, cfg.descriptor_bits()?)?;
            let queries: Vec<Impression> = data.fingers.iter().filter_map(|f| f.first().cloned()).collect();
            let rep = attack::false_accept(&cfg, &rec, &queries, cli.cores)?;
            Outcome::new(&rep, attack_text(&rep), rep.success)
        }
        Cmd::Attack(AttackCmd::Correlate {
            vault_a,
            vault_b,
            radius,
            threshold,
        }) => {
            let (Record::Classic(a), Record::Classic(b)) = (load_record(vault_a)?, load_record(vault_b)?) else {
                bail!("correlation needs two classic records");
            };
            let mut cfg = CorrelationAttackConfig::default();
            cfg.correlation.pair_radius = *radius;
            cfg.correlation.threshold = *threshold;
            if cli.budget.is_some() {
                cfg.budget = cli.budget;
            }
            let rep = attack::correlate(&a, &b, &cfg);
            Outcome::new(&rep, attack_text(&rep), rep.success)
        }
        Cmd::TrainGrid(a) => {
            let data = read_dataset(&a.dataset, None)?;
            let space = SearchSpace {
                lambdas: a.lambdas.clone(),
                s: a.s.clone(),
                t_max: a.t_max.clone(),
                k: (!a.k.is_empty()).then(|| a.k.clone()),
            };
            let out = train_parameters(&data.templates(), &space)?;
            #[derive(Serialize)]
            struct Row {
                lambda: f64,
                s: usize,
                t_max: usize,
                k: usize,
                gar: f64,
                far: f64,
                genuine: (usize, usize),
                impostor: (usize, usize),
            }
            let rows: Vec<Row> = out
                .table
                .iter()
                .map(|r| Row {
                    lambda: r.params.lambda,
                    s: r.params.s,
                    t_max: r.params.t_max,
                    k: r.params.k,
                    gar: r.gar(),
                    far: r.far(),
                    genuine: (r.genuine_accepts, r.genuine_trials),
                    impostor: (r.false_accepts, r.impostor_trials),
                })
                .collect();
            let b = out.best;
            let text = format!(
                "best: lambda={} s={} tMax={} k={} ({} configurations scored)\n",
                b.lambda,
                b.s,
                b.t_max,
                b.k,
                rows.len()
            );
            #[derive(Serialize)]
            struct Trained {
                best: Row,
                table: Vec<Row>,
            }
            let best = rows
                .iter()
                .find(|r| r.lambda == b.lambda && r.s == b.s && r.t_max == b.t_max && r.k == b.k)
                .map(|r| Row { ..*r })
                .context("best row missing")?;
            Outcome::new(&Trained { best, table: rows }, text, true)
        }
        Cmd::UnlockStats(a) => {
            let cfg = a.scheme.config(cli);
            let data = read_dataset(&a.dataset, None)?;
            let stats = harness::run_unlocking_stats(&data, &cfg)?;
            let rows = harness::unlocking_cost_table(&stats.stats, &a.ks, &a.ds)?;
            let mut text = format!(
                "{} impostor pairs, vault size {}\n{:>4} {:>8} {:>14} {:>16}\n",
                stats.stats.len(),
                stats.vault_size,
                "k",
                "D",
                "FAR",
                "cost (iter.)"
            );
            for r in &rows {
                text.push_str(&format!("{:>4} {:>8} {:>14.4e} {:>16.4e}\n", r.k, r.d, r.far, r.cost_iterations));
            }
            #[derive(Serialize)]
            struct Out {
                stats: harness::UnlockingStats,
                costs: Vec<harness::CostRow>,
            }
            Outcome::new(&Out { stats, costs: rows }, text, true)
        }
        Cmd::Stats(StatsCmd::Ci { s, n, level, idt }) => {
            let rec = TrialRecord::new(*s, *n)?;
            let ci = clopper_pearson(&rec, *level)?;
            interval_outcome(point_estimate(&rec), ci.lower, ci.upper, *level, *idt, cli.cores)
        }
        Cmd::Stats(StatsCmd::Rot { n, idt }) => {
            let ci = rule_of_three(*n)?;
            interval_outcome(0.0, ci.lower, ci.upper, ci.level, *idt, cli.cores)
        }
        Cmd::Tables { table } => {
            let cores = tables::PUBLISHED_CORES;
            match table {
                2 => {
                    let rows = tables::brute_force_table(cores)?;
                    Outcome::new(&rows, tables::render_brute_force(&rows), true)
                }
                3 => {
                    let rows = tables::hardened_table()?;
                    Outcome::new(&rows, tables::render_hardened(&rows), true)
                }
                4 => {
                    let rows = tables::false_accept_table(cores)?;
                    Outcome::new(&rows, tables::render_false_accept(&rows), true)
                }
                _ => {
                    let rows = tables::grid_cost_table(cores, 1 << 16)?;
                    Outcome::new(&rows, tables::render_grid_cost(&rows), true)
                }
            }
        }
    }
}

fn attack_text(r: &attack::AttackReport) -> String {
    let mut s = format!(
        "{}: {} after {} iterations in {:.3} s ({:.0} it/s)\n",
        r.attack,
        if r.success { "success" } else { "failure" },
        r.iterations,
        r.seconds,
        r.iterations_per_second
    );
    if let Some(score) = r.score {
        s.push_str(&format!("correlation score {score}, cross-match {}\n", r.cross_match.unwrap_or(false)));
    }
    if let Some(secret) = &r.secret {
        s.push_str(&format!("secret {secret}\n"));
    }
    s
}

fn interval_outcome(estimate: f64, lower: f64, upper: f64, level: f64, idt: Option<f64>, cores: usize) -> Result<Outcome> {
    #[derive(Serialize)]
    struct Interval {
        estimate: f64,
        lower: f64,
        upper: f64,
        level: f64,
        /// Attack seconds at the upper and lower bound.
        #[serde(skip_serializing_if = "Option::is_none")]
        attack_seconds: Option<(f64, Option<f64>)>,
        #[serde(skip_serializing_if = "Option::is_none")]
        median_queries: Option<(f64, Option<f64>)>,
    }
    let priced = |p: f64| -> Result<Option<(f64, f64)>> {
        Ok(match idt {
            Some(idt) if p > 0.0 && p < 1.0 => Some((fa_cost(p, idt, cores)?, median_trials(p)?)),
            _ => None,
        })
    };
    let (fast, slow) = (priced(upper)?, priced(lower)?);
    let iv = Interval {
        estimate,
        lower,
        upper,
        level,
        attack_seconds: fast.map(|f| (f.0, slow.map(|s| s.0))),
        median_queries: fast.map(|f| (f.1, slow.map(|s| s.1))),
    };
    let mut text = format!(
        "{:.4}% [{:.4}%, {:.4}%] ({:.0}% confidence)\n",
        estimate * 100.0,
        lower * 100.0,
        upper * 100.0,
        level * 100.0
    );
    if let Some((secs, slow)) = iv.attack_seconds {
        match slow {
            Some(s) => text.push_str(&format!("false-accept attack: {} .. {}\n", tables::duration(secs), tables::duration(s))),
            None => text.push_str(&format!("false-accept attack: > {}\n", tables::duration(secs))),
        }
    }
    Outcome::new(&iv, text, true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            if cli.json {
                println!("{}", serde_json::to_string_pretty(&out.json).unwrap_or_default());
            } else {
                print!("{}", out.text);
            }
            if out.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
