//! Experiment configuration and the artifact-writing runner behind the
//! `fedflip` command line.
//!
//! Configuration files are flat `key = value` text; `#` starts a comment and
//! list values are comma separated. Recognized keys:
//!
//! | key | default | meaning |
//! |-----|---------|---------|
//! | `learning_rate` | 0.01 | SGD step size |
//! | `momentum` | 0.9 | classical momentum |
//! | `batch_size` | 32 | client mini-batch size |
//! | `comm_rounds` | 100 | communication rounds |
//! | `num_clients` | 10 | simulated hospitals |
//! | `local_epochs` | 1 | epochs per client per round |
//! | `flip_percent` | none | single attack strength, percent |
//! | `malicious_client` | 0 | attacking client index |
//! | `sweep` | none | list of flip percentages |
//! | `seeds` | 42 | list of run seeds |
//! | `mode` | both | `federated`, `centralized` or `both` |
//! | `data` | synth | CSV path, or `synth` |
//! | `synth_samples` | 2000 | rows generated when `data = synth` |
//! | `synth_spread` | [`DEFAULT_SYNTH_SPREAD`] | cluster half-width when `data = synth` |
//! | `test_fraction` | 0.2 | held-out share of the data |
//! | `output_dir` | fedflip-out | artifact directory |
//!
//! Relative `data` and `output_dir` paths are resolved against the directory
//! holding the configuration file.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::adversary::AttackSpec;
use crate::dataset::{self, ClientShard, LabeledDataset, SynthSpec};
use crate::error::{Error, Result};
use crate::federation::{self, HyperParams, RunResult};
use crate::metrics;
use crate::rng::derive_seed;

/// Flip percentages swept when none are configured: 2, 4, …, 20.
pub const DEFAULT_SWEEP: [f64; 10] = [2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 14.0, 16.0, 18.0, 20.0];

/// Cluster half-width of the synthetic surrogate when none is configured.
pub const DEFAULT_SYNTH_SPREAD: f64 = 3.0;

/// Environment variable capping worker threads.
pub const THREADS_ENV: &str = "FEDFLIP_THREADS";

const STREAM_DATA: u64 = 0x44415441;
const STREAM_SPLIT: u64 = 0x53504c54;
const STREAM_PARTITION: u64 = 0x50415254;
const STREAM_ATTACK: u64 = 0x4154434b;

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Csv(PathBuf),
    Synth {
        n_samples: usize,
        cluster_spread: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Federated,
    Centralized,
    Both,
}

impl Mode {
    fn federated(self) -> bool {
        matches!(self, Mode::Federated | Mode::Both)
    }

    fn centralized(self) -> bool {
        matches!(self, Mode::Centralized | Mode::Both)
    }
}

impl FromStr for Mode {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        match s {
            "federated" => Ok(Mode::Federated),
            "centralized" => Ok(Mode::Centralized),
            "both" => Ok(Mode::Both),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub data: DataSource,
    pub hyper: HyperParams,
    pub mode: Mode,
    /// Single attack; its `seed` is mixed with each run seed.
    pub attack: Option<AttackSpec>,
    /// Attacking client for single runs and sweeps.
    pub malicious_client: usize,
    pub sweep: Option<Vec<f64>>,
    pub seeds: Vec<u64>,
    pub test_fraction: f64,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            data: DataSource::Synth {
                n_samples: 2000,
                cluster_spread: DEFAULT_SYNTH_SPREAD,
            },
            hyper: HyperParams::default(),
            mode: Mode::Both,
            attack: None,
            malicious_client: 0,
            sweep: None,
            seeds: vec![42],
            test_fraction: 0.2,
            output_dir: PathBuf::from("fedflip-out"),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.hyper.validate()?;
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("at least one seed is required".into()));
        }
        if let Some(sweep) = &self.sweep {
            if sweep.is_empty() {
                return Err(Error::InvalidConfig("sweep list is empty".into()));
            }
            if let Some(p) = sweep.iter().find(|p| !(0.0..=100.0).contains(*p)) {
                return Err(Error::InvalidConfig(format!(
                    "sweep percentage {p} outside [0, 100]"
                )));
            }
            if self.attack.is_some() {
                return Err(Error::ContradictoryKeys {
                    first: "sweep".into(),
                    second: "flip_percent".into(),
                });
            }
        }
        if self.malicious_client >= self.hyper.n_clients {
            return Err(Error::InvalidConfig(format!(
                "malicious_client {} must be below num_clients {}",
                self.malicious_client, self.hyper.n_clients
            )));
        }
        if let Some(a) = &self.attack {
            a.validate(self.hyper.n_clients).map_err(|e| match e {
                Error::NoSuchClient { client, clients } => Error::InvalidConfig(format!(
                    "malicious_client {client} must be below num_clients {clients}"
                )),
                other => other,
            })?;
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "test_fraction must lie strictly between 0 and 1, got {}",
                self.test_fraction
            )));
        }
        if let DataSource::Synth {
            n_samples,
            cluster_spread,
        } = &self.data
        {
            SynthSpec::lesion_like(*n_samples, *cluster_spread).validate()?;
        }
        Ok(())
    }
}

fn parse_list<T: FromStr>(value: &str) -> Option<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().ok())
        .collect()
}

/// Reads `key = value` lines into an ordered map, rejecting duplicates.
fn read_pairs(path: &Path) -> Result<BTreeMap<String, (usize, String)>> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", path.display())))?;
    let mut pairs = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::InvalidConfig(format!(
                "{}:{}: expected `key = value`",
                path.display(),
                i + 1
            ))
        })?;
        let key = key.trim().to_string();
        if pairs.contains_key(&key) {
            return Err(Error::InvalidConfig(format!(
                "{}:{}: key `{key}` given twice",
                path.display(),
                i + 1
            )));
        }
        pairs.insert(key, (i + 1, value.trim().to_string()));
    }
    Ok(pairs)
}

/// Parses and validates an experiment configuration file.
pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let pairs = read_pairs(path)?;
    let base = path.parent().unwrap_or(Path::new(""));
    let mut cfg = ExperimentConfig::default();
    let mut flip_percent = None;
    let mut synth_samples = 2000usize;
    let mut synth_spread = DEFAULT_SYNTH_SPREAD;
    let mut csv_path = None;
    cfg.output_dir = base.join(&cfg.output_dir);

    for (key, (line, value)) in &pairs {
        let bad = || Error::BadValue {
            path: path.to_path_buf(),
            line: *line,
            key: key.clone(),
            value: value.clone(),
        };
        fn num<T: FromStr>(v: &str, bad: impl Fn() -> Error) -> Result<T> {
            v.parse().map_err(|_| bad())
        }
        let h = &mut cfg.hyper;
        match key.as_str() {
            "learning_rate" => h.learning_rate = num(value, bad)?,
            "momentum" => h.momentum = num(value, bad)?,
            "batch_size" => h.batch_size = num(value, bad)?,
            "comm_rounds" => h.comm_rounds = num(value, bad)?,
            "num_clients" => h.n_clients = num(value, bad)?,
            "local_epochs" => h.local_epochs = num(value, bad)?,
            "flip_percent" => flip_percent = Some(num::<f64>(value, bad)?),
            "malicious_client" => cfg.malicious_client = num(value, bad)?,
            "sweep" => cfg.sweep = Some(parse_list(value).ok_or_else(bad)?),
            "seeds" => cfg.seeds = parse_list(value).ok_or_else(bad)?,
            "mode" => cfg.mode = value.parse().map_err(|_| bad())?,
            "data" => {
                if value != "synth" {
                    csv_path = Some(base.join(value));
                }
            }
            "synth_samples" => synth_samples = num(value, bad)?,
            "synth_spread" => synth_spread = num(value, bad)?,
            "test_fraction" => cfg.test_fraction = num(value, bad)?,
            "output_dir" => cfg.output_dir = base.join(value),
            _ => {
                return Err(Error::UnknownKey {
                    path: path.to_path_buf(),
                    line: *line,
                    key: key.clone(),
                })
            }
        }
    }

    cfg.data = match csv_path {
        Some(p) => DataSource::Csv(p),
        None => DataSource::Synth {
            n_samples: synth_samples,
            cluster_spread: synth_spread,
        },
    };
    if let Some(p) = flip_percent {
        if cfg.sweep.is_some() {
            return Err(Error::ContradictoryKeys {
                first: "sweep".into(),
                second: "flip_percent".into(),
            });
        }
        cfg.attack = Some(AttackSpec::new(cfg.malicious_client, p, 0)?);
    }
    cfg.validate()?;
    Ok(cfg)
}

/// One line of `sweep.csv`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub flip_percent: f64,
    pub clean_fl_accuracy: f64,
    pub poisoned_fl_accuracy: f64,
    pub clean_central_accuracy: f64,
    pub poisoned_central_accuracy: f64,
    pub seed: u64,
}

pub const SWEEP_HEADER: &str = "flip_percent,clean_fl_accuracy,poisoned_fl_accuracy,clean_central_accuracy,poisoned_central_accuracy,seed";

/// Renders sweep rows as CSV with full-precision accuracies.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.flip_percent,
            r.clean_fl_accuracy,
            r.poisoned_fl_accuracy,
            r.clean_central_accuracy,
            r.poisoned_central_accuracy,
            r.seed
        );
    }
    out
}

/// Prepared data for one seed.
#[derive(Debug, Clone)]
pub struct SeedData {
    pub seed: u64,
    pub train: LabeledDataset,
    pub test: LabeledDataset,
    pub shards: Vec<ClientShard>,
}

/// Loads or synthesizes the data, then splits and partitions it for `seed`.
pub fn prepare_data(
    cfg: &ExperimentConfig,
    seed: u64,
    csv: Option<&LabeledDataset>,
) -> Result<SeedData> {
    let owned;
    let data = match (&cfg.data, csv) {
        (_, Some(d)) => d,
        (DataSource::Csv(p), None) => {
            owned = dataset::load_csv(p)?;
            &owned
        }
        (
            DataSource::Synth {
                n_samples,
                cluster_spread,
            },
            None,
        ) => {
            let spec = SynthSpec::lesion_like(*n_samples, *cluster_spread);
            owned = dataset::synth_dataset(&spec, derive_seed(seed, &[STREAM_DATA]))?;
            &owned
        }
    };
    let (train, test) =
        dataset::train_test_split(data, cfg.test_fraction, derive_seed(seed, &[STREAM_SPLIT]))?;
    let shards = dataset::partition_iid(
        &train,
        cfg.hyper.n_clients,
        derive_seed(seed, &[STREAM_PARTITION]),
    )?;
    Ok(SeedData {
        seed,
        train,
        test,
        shards,
    })
}

/// The attack a run with `flip_percent` uses for `seed`.
pub fn attack_for(cfg: &ExperimentConfig, flip_percent: f64, seed: u64) -> AttackSpec {
    let base = cfg.attack.map(|a| a.seed).unwrap_or(0);
    AttackSpec {
        malicious_client: cfg.malicious_client,
        flip_percent,
        seed: derive_seed(seed, &[STREAM_ATTACK, base]),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Setting {
    Federated,
    Centralized,
}

impl Setting {
    fn dir(self) -> &'static str {
        match self {
            Setting::Federated => "federated",
            Setting::Centralized => "centralized",
        }
    }
}

fn run_one(
    cfg: &ExperimentConfig,
    data: &SeedData,
    setting: Setting,
    flip_percent: Option<f64>,
) -> Result<RunResult> {
    let attack = flip_percent.map(|p| attack_for(cfg, p, data.seed));
    match setting {
        Setting::Federated => federation::run_federated(
            &data.shards,
            &data.test,
            &cfg.hyper,
            attack.as_ref(),
            data.seed,
        ),
        Setting::Centralized => federation::run_centralized(
            &data.train,
            &data.test,
            &cfg.hyper,
            attack.as_ref(),
            data.seed,
        ),
    }
}

/// `round,loss,accuracy` with one row per communication round.
pub fn history_csv(result: &RunResult) -> String {
    let mut out = String::from("round,loss,accuracy\n");
    for r in &result.history {
        let _ = writeln!(out, "{},{},{}", r.round, r.global_loss, r.global_accuracy);
    }
    out
}

/// Flat `key=value` summary of a run.
pub fn run_record(result: &RunResult) -> String {
    let last = result.history.last();
    let mut out = String::new();
    let _ = writeln!(out, "initial_loss={:.4}", result.initial.global_loss);
    let _ = writeln!(
        out,
        "initial_accuracy={:.4}",
        result.initial.global_accuracy
    );
    if let Some(last) = last {
        let _ = writeln!(out, "final_loss={:.4}", last.global_loss);
    }
    out.push_str(&metrics::report_record(&result.report));
    out
}

fn run_dir(seed: u64, flip_percent: Option<f64>, setting: Setting) -> PathBuf {
    let variant = match flip_percent {
        None => "clean".to_string(),
        Some(p) => format!("flip-{p}"),
    };
    PathBuf::from(format!("seed-{seed}"))
        .join(variant)
        .join(setting.dir())
}

fn write_run(root: &Path, rel: &Path, result: &RunResult) -> Result<()> {
    let dir = root.join(rel);
    fs::create_dir_all(&dir)?;
    fs::write(
        dir.join("report.txt"),
        metrics::format_report(&result.report),
    )?;
    fs::write(dir.join("history.csv"), history_csv(result))?;
    fs::write(dir.join("metrics.txt"), run_record(result))?;
    Ok(())
}

/// What a finished experiment produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// `(relative run directory, final accuracy)` for every run.
    pub runs: Vec<(PathBuf, f64)>,
    pub sweep: Option<Vec<SweepRow>>,
}

/// Parses `FEDFLIP_THREADS`; `None` when unset.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(Error::InvalidConfig(format!(
                "{THREADS_ENV} must be a positive integer, got `{v}`"
            ))),
        },
    }
}

/// Runs the configured experiment and writes its artifacts under
/// `cfg.output_dir`. Everything is first written to a staging directory and
/// moved into place only on success, so a failed run leaves nothing behind.
pub fn run(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<Outcome> {
    cfg.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start worker pool: {e}")))?;

    let out_existed = cfg.output_dir.exists();
    fs::create_dir_all(&cfg.output_dir)?;
    let result = (|| {
        let staging = tempfile::Builder::new()
            .prefix(".fedflip-staging-")
            .tempdir_in(&cfg.output_dir)?;
        let outcome = pool.install(|| execute(cfg, staging.path()))?;
        publish(staging.path(), &cfg.output_dir)?;
        Ok(outcome)
    })();
    if result.is_err() && !out_existed {
        let _ = fs::remove_dir_all(&cfg.output_dir);
    }
    result
}

/// Moves every top-level entry of `staging` into `dest`, replacing old ones.
fn publish(staging: &Path, dest: &Path) -> Result<()> {
    let mut entries: Vec<_> = fs::read_dir(staging)?.collect::<std::io::Result<_>>()?;
    entries.sort_by_key(|e| e.file_name());
    for entry in entries {
        let target = dest.join(entry.file_name());
        if target.is_dir() {
            fs::remove_dir_all(&target)?;
        } else if target.exists() {
            fs::remove_file(&target)?;
        }
        fs::rename(entry.path(), target)?;
    }
    Ok(())
}

fn execute(cfg: &ExperimentConfig, root: &Path) -> Result<Outcome> {
    let csv = match &cfg.data {
        DataSource::Csv(p) => Some(dataset::load_csv(p)?),
        DataSource::Synth { .. } => None,
    };
    let prepared: Vec<SeedData> = cfg
        .seeds
        .par_iter()
        .map(|&s| prepare_data(cfg, s, csv.as_ref()))
        .collect::<Result<_>>()?;

    let settings: Vec<Setting> = if cfg.sweep.is_some() {
        vec![Setting::Federated, Setting::Centralized]
    } else {
        [Setting::Federated, Setting::Centralized]
            .into_iter()
            .filter(|s| match s {
                Setting::Federated => cfg.mode.federated(),
                Setting::Centralized => cfg.mode.centralized(),
            })
            .collect()
    };
    let variants: Vec<Option<f64>> = match &cfg.sweep {
        Some(ps) => std::iter::once(None)
            .chain(ps.iter().map(|&p| Some(p)))
            .collect(),
        None => vec![cfg.attack.map(|a| a.flip_percent)],
    };

    let cells: Vec<(usize, Option<f64>, Setting)> = (0..prepared.len())
        .flat_map(|i| {
            let settings = &settings;
            variants
                .iter()
                .flat_map(move |&v| settings.iter().map(move |&s| (i, v, s)))
        })
        .collect();
    let results: Vec<RunResult> = cells
        .par_iter()
        .map(|&(i, v, s)| run_one(cfg, &prepared[i], s, v))
        .collect::<Result<_>>()?;

    let mut runs = Vec::with_capacity(cells.len());
    for (&(i, v, s), result) in cells.iter().zip(&results) {
        let rel = run_dir(prepared[i].seed, v, s);
        write_run(root, &rel, result)?;
        runs.push((rel, result.final_accuracy()));
    }

    let sweep = cfg.sweep.as_ref().map(|ps| {
        let acc = |i: usize, v: Option<f64>, s: Setting| {
            cells
                .iter()
                .position(|&c| c == (i, v, s))
                .map(|k| results[k].final_accuracy())
                .expect("every sweep cell was run")
        };
        let mut rows = Vec::new();
        for (i, data) in prepared.iter().enumerate() {
            let clean_fl = acc(i, None, Setting::Federated);
            let clean_central = acc(i, None, Setting::Centralized);
            for &p in ps {
                rows.push(SweepRow {
                    flip_percent: p,
                    clean_fl_accuracy: clean_fl,
                    poisoned_fl_accuracy: acc(i, Some(p), Setting::Federated),
                    clean_central_accuracy: clean_central,
                    poisoned_central_accuracy: acc(i, Some(p), Setting::Centralized),
                    seed: data.seed,
                });
            }
        }
        rows
    });
    if let Some(rows) = &sweep {
        fs::write(root.join("sweep.csv"), sweep_csv(rows))?;
    }
    Ok(Outcome { runs, sweep })
}

/// Human-readable sweep table with accuracies as percentages.
pub fn format_sweep(rows: &[SweepRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>6} {:>6} {:>10} {:>10} {:>10} {:>10}",
        "seed", "flip%", "fl", "fl+flip", "central", "central+flip"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:>6} {:>6} {:>10.3} {:>10.3} {:>10.3} {:>10.3}",
            r.seed,
            r.flip_percent,
            100.0 * r.clean_fl_accuracy,
            100.0 * r.poisoned_fl_accuracy,
            100.0 * r.clean_central_accuracy,
            100.0 * r.poisoned_central_accuracy
        );
    }
    out
}

/// Synthetic-data description for `fedflip synth`:
/// `n_samples`, `class_weights` (seven values), `cluster_spread`, `seed`.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthRequest {
    pub spec: SynthSpec,
    pub seed: u64,
}

pub fn parse_synth_spec(path: &Path) -> Result<SynthRequest> {
    let pairs = read_pairs(path)?;
    let mut spec = SynthSpec::lesion_like(2000, DEFAULT_SYNTH_SPREAD);
    let mut seed = 0u64;
    for (key, (line, value)) in &pairs {
        let bad = || Error::BadValue {
            path: path.to_path_buf(),
            line: *line,
            key: key.clone(),
            value: value.clone(),
        };
        match key.as_str() {
            "n_samples" => spec.n_samples = value.parse().map_err(|_| bad())?,
            "class_weights" => spec.class_weights = parse_list(value).ok_or_else(bad)?,
            "cluster_spread" => spec.cluster_spread = value.parse().map_err(|_| bad())?,
            "seed" => seed = value.parse().map_err(|_| bad())?,
            _ => {
                return Err(Error::UnknownKey {
                    path: path.to_path_buf(),
                    line: *line,
                    key: key.clone(),
                })
            }
        }
    }
    spec.validate()?;
    Ok(SynthRequest { spec, seed })
}

/// Generates the requested dataset and writes it as pixel CSV.
pub fn synth_to_csv(req: &SynthRequest, out: &Path) -> Result<LabeledDataset> {
    let data = dataset::synth_dataset(&req.spec, req.seed)?;
    let dir = out
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let tmp = tempfile::NamedTempFile::new_in(dir)?;
    data.save_csv(tmp.path())?;
    tmp.persist(out).map_err(|e| Error::Io(e.error))?;
    Ok(data)
}
