//! Parameter sweeps: the Cartesian product of datasets, lexicons and
//! scoring options, evaluated cell by cell.
//!
//! A sweep is described by a TOML file:
//!
//! ```toml
//! bin_sizes = [1, 10, 50, 100, 200, 300]
//! bin_mode = "rolling"          # or "tumbling"
//! kinds = ["cat", "cont"]       # lexicon kinds to include; empty = all
//! oov = ["skip", "zero"]
//! pooling = ["instance"]        # or "word"
//! thresholds = [0.0]
//! fallback = [false]
//! seeds = [0]                   # used by generated datasets and oracle cells
//! accuracies = []               # non-empty adds oracle cells
//!
//! [[dataset]]
//! id = "voc"
//! emotion = "valence"
//! path = "data/voc.tsv"         # relative to the config file
//! text_column = "Tweet"
//! label_column = "Intensity Class"
//!
//! [[lexicon]]
//! id = "vad"
//! emotion = "valence"
//! kind = "cont"
//! path = "lexicons/vad.tsv"
//! range = "-1..1"
//! fallback = []                 # ids appended to the chain when fallback = true
//! fallback_only = false         # true: only used behind other lexicons
//! binarize = { id = "vad-cat", cutoffs = [-0.333, 0.333], labels = [-1, 0, 1] }
//! ```
//!
//! A dataset may instead be generated with `synthetic = { ... }` (a
//! [`CorpusSpec`]) and resampled into a wave with `dynamic = { ... }` (a
//! [`WaveSpec`]); a lexicon may be `synthetic = "primary"` or `"secondary"`.
//!
//! Each cell is keyed by a hash of its parameters and of the inputs it reads.
//! Finished cells are appended to `cells.jsonl` in the output directory, and a
//! rerun only computes the cells missing from it.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{evaluate, RunParams, TIE_METHOD};
use crate::arcs::{
    arc_from_scores, label_arc, load_dataset, BinMode, BinSpec, Column, DatasetSchema, LabeledStream, Pooling,
};
use crate::lexicon::{load_lexicon, FallbackChain, Lexicon, LexiconKind, LoadOptions, ScoreRange, ThresholdFilter};
use crate::manifest::sha256_hex;
use crate::simulate::{oracle_predict, parse_label_set, synthesize_dynamic, OracleConfig, WaveSpec};
use crate::synthetic::{generate, CorpusSpec};
use crate::text::{analyze, score_instance, OovPolicy, PreprocessOptions};

pub const CELLS_FILE: &str = "cells.jsonl";
pub const RESULTS_FILE: &str = "results.csv";
pub const RESULTS_JSONL_FILE: &str = "results.jsonl";
pub const SUMMARY_FILE: &str = "summary.csv";

/// Units (cells sharing everything but the bin size) computed between
/// writes to the cell log.
const CHUNK: usize = 32;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("invalid sweep config: {0}")]
    Config(String),
    #[error("corrupt cell log {path} line {line}: {message}")]
    CellLog { path: String, line: usize, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> SweepError + '_ {
    move |source| SweepError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub bin_sizes: Vec<usize>,
    #[serde(default = "default_bin_mode")]
    pub bin_mode: BinMode,
    #[serde(default)]
    pub kinds: Vec<LexiconKind>,
    #[serde(default = "default_oov")]
    pub oov: Vec<OovPolicy>,
    #[serde(default = "default_pooling")]
    pub pooling: Vec<Pooling>,
    #[serde(default = "default_thresholds")]
    pub thresholds: Vec<f64>,
    #[serde(default = "default_fallback")]
    pub fallback: Vec<bool>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub accuracies: Vec<f64>,
    #[serde(rename = "dataset", default)]
    pub datasets: Vec<DatasetEntry>,
    #[serde(rename = "lexicon", default)]
    pub lexicons: Vec<LexiconEntry>,
}

fn default_bin_mode() -> BinMode {
    BinMode::Rolling
}
fn default_oov() -> Vec<OovPolicy> {
    vec![OovPolicy::Skip]
}
fn default_pooling() -> Vec<Pooling> {
    vec![Pooling::InstanceMean]
}
fn default_thresholds() -> Vec<f64> {
    vec![0.0]
}
fn default_fallback() -> Vec<bool> {
    vec![false]
}
fn default_seeds() -> Vec<u64> {
    vec![0]
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetEntry {
    pub id: String,
    pub emotion: String,
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub text_column: Option<String>,
    #[serde(default)]
    pub label_column: Option<String>,
    /// Single-character delimiter; guessed from the extension when absent.
    #[serde(default)]
    pub delimiter: Option<String>,
    #[serde(default)]
    pub has_header: Option<bool>,
    /// Generate the dataset instead of reading it; `seed` is set per cell.
    #[serde(default)]
    pub synthetic: Option<CorpusSpec>,
    /// Resample into a wave; `seed` is set per cell.
    #[serde(default)]
    pub dynamic: Option<WaveSpec>,
    #[serde(default = "default_true")]
    pub order_by_gold: bool,
    /// Label set for oracle cells, e.g. `"-3..3"`; defaults to the distinct
    /// gold labels.
    #[serde(default)]
    pub labels: Option<String>,
}

impl DatasetEntry {
    fn seeded(&self) -> bool {
        self.synthetic.is_some() || self.dynamic.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LexiconEntry {
    pub id: String,
    pub emotion: String,
    pub kind: LexiconKind,
    #[serde(default)]
    pub path: Option<PathBuf>,
    /// `"primary"` or `"secondary"` synthetic vocabulary.
    #[serde(default)]
    pub synthetic: Option<String>,
    #[serde(default)]
    pub vocab_size: Option<usize>,
    /// `lo..hi`; required for file lexicons.
    #[serde(default)]
    pub range: Option<String>,
    #[serde(default)]
    pub labels: Option<Vec<f64>>,
    #[serde(default)]
    pub score_column: Option<usize>,
    #[serde(default)]
    pub has_header: bool,
    #[serde(default)]
    pub fallback: Vec<String>,
    /// Only used behind other lexicons, never swept on its own.
    #[serde(default)]
    pub fallback_only: bool,
    /// Also sweep a categorical version derived from this lexicon.
    #[serde(default)]
    pub binarize: Option<BinarizeEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BinarizeEntry {
    pub id: String,
    pub cutoffs: Vec<f64>,
    pub labels: Vec<f64>,
}

impl SweepConfig {
    pub fn from_toml(text: &str) -> Result<Self, SweepError> {
        let cfg: SweepConfig = toml::from_str(text).map_err(|e| SweepError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config; relative paths in it are resolved against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, SweepError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &mut Option<PathBuf>| {
            if let Some(p) = p {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        };
        cfg.datasets.iter_mut().for_each(|d| resolve(&mut d.path));
        cfg.lexicons.iter_mut().for_each(|l| resolve(&mut l.path));
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), SweepError> {
        let bad = |m: String| Err(SweepError::Config(m));
        if self.bin_sizes.is_empty() {
            return bad("bin_sizes must not be empty".into());
        }
        if self.datasets.is_empty() {
            return bad("at least one [[dataset]] is required".into());
        }
        if self.lexicons.is_empty() && self.accuracies.is_empty() {
            return bad("nothing to evaluate: no [[lexicon]] and no accuracies".into());
        }
        for (axis, empty) in [
            ("oov", self.oov.is_empty()),
            ("pooling", self.pooling.is_empty()),
            ("thresholds", self.thresholds.is_empty()),
            ("fallback", self.fallback.is_empty()),
            ("seeds", self.seeds.is_empty()),
        ] {
            if empty {
                return bad(format!("axis {axis} must not be empty"));
            }
        }
        let mut ids = BTreeSet::new();
        for d in &self.datasets {
            if !ids.insert(d.id.as_str()) {
                return bad(format!("duplicate dataset id {:?}", d.id));
            }
            if d.path.is_some() == d.synthetic.is_some() {
                return bad(format!("dataset {:?} needs exactly one of path or synthetic", d.id));
            }
            if let Some(delim) = &d.delimiter {
                if delim.len() != 1 {
                    return bad(format!("dataset {:?}: delimiter must be one byte", d.id));
                }
            }
        }
        let mut ids = BTreeSet::new();
        for l in &self.lexicons {
            let derived = l.binarize.as_ref().map(|b| b.id.as_str());
            for id in std::iter::once(l.id.as_str()).chain(derived) {
                if !ids.insert(id) {
                    return bad(format!("duplicate lexicon id {id:?}"));
                }
            }
            if l.path.is_some() == l.synthetic.is_some() {
                return bad(format!("lexicon {:?} needs exactly one of path or synthetic", l.id));
            }
            if l.path.is_some() && l.range.is_none() {
                return bad(format!("lexicon {:?} needs a range", l.id));
            }
        }
        for l in &self.lexicons {
            if let Some(f) = l.fallback.iter().find(|f| !ids.contains(f.as_str())) {
                return bad(format!("lexicon {:?} falls back to unknown lexicon {f:?}", l.id));
            }
        }
        Ok(())
    }

    /// Every cell of the grid, in table order.
    pub fn cells(&self) -> Vec<RunParams> {
        self.units().into_iter().flat_map(|u| u.cells).collect()
    }

    fn lexicon_variants(&self) -> Vec<Variant<'_>> {
        let mut out = Vec::new();
        for l in &self.lexicons {
            out.push(Variant {
                id: &l.id,
                entry: l,
                kind: l.kind,
                binarize: None,
            });
            if let Some(b) = &l.binarize {
                out.push(Variant {
                    id: &b.id,
                    entry: l,
                    kind: LexiconKind::Categorical,
                    binarize: Some(b),
                });
            }
        }
        out
    }

    fn units(&self) -> Vec<Unit> {
        let bins: Vec<usize> = self.bin_sizes.clone();
        let mut units = Vec::new();
        let variants = self.lexicon_variants();
        for (di, d) in self.datasets.iter().enumerate() {
            let seeds: Vec<Option<u64>> = if d.seeded() {
                self.seeds.iter().copied().map(Some).collect()
            } else {
                vec![None]
            };
            for v in &variants {
                if v.entry.fallback_only || !v.entry.emotion.eq_ignore_ascii_case(&d.emotion) {
                    continue;
                }
                if !self.kinds.is_empty() && !self.kinds.contains(&v.kind) {
                    continue;
                }
                for &fallback in &self.fallback {
                    if fallback && (v.binarize.is_some() || v.entry.fallback.is_empty()) {
                        log::debug!("lexicon {} has no fallback; skipping fallback cells", v.id);
                        continue;
                    }
                    for &threshold in &self.thresholds {
                        for &oov in &self.oov {
                            for &pooling in &self.pooling {
                                for &seed in &seeds {
                                    let base = RunParams {
                                        dataset: d.id.clone(),
                                        emotion: d.emotion.clone(),
                                        method: "lexicon".into(),
                                        lexicon: Some(v.id.to_string()),
                                        kind: Some(v.kind),
                                        oov: Some(oov),
                                        pooling: Some(pooling),
                                        threshold: Some(threshold),
                                        accuracy: None,
                                        bin_size: 0,
                                        bin_mode: Some(self.bin_mode),
                                        fallback,
                                        seed,
                                    };
                                    units.push(Unit::new(di, base, &bins));
                                }
                            }
                        }
                    }
                }
            }
            for &accuracy in &self.accuracies {
                for &seed in &self.seeds {
                    let base = RunParams {
                        dataset: d.id.clone(),
                        emotion: d.emotion.clone(),
                        method: "oracle".into(),
                        accuracy: Some(accuracy),
                        bin_mode: Some(self.bin_mode),
                        seed: Some(seed),
                        ..RunParams::default()
                    };
                    units.push(Unit::new(di, base, &bins));
                }
            }
        }
        units
    }
}

struct Variant<'a> {
    id: &'a str,
    entry: &'a LexiconEntry,
    kind: LexiconKind,
    binarize: Option<&'a BinarizeEntry>,
}

/// Cells that differ only in bin size; their instance scores are shared.
struct Unit {
    dataset: usize,
    cells: Vec<RunParams>,
}

impl Unit {
    fn new(dataset: usize, base: RunParams, bins: &[usize]) -> Self {
        let cells = bins
            .iter()
            .map(|&b| RunParams {
                bin_size: b,
                ..base.clone()
            })
            .collect();
        Unit { dataset, cells }
    }
}

/// One row of the results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub key: String,
    pub params: RunParams,
    pub rho: Option<f64>,
    pub n_points: usize,
    pub n_excluded: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepOptions {
    /// Recompute cells whose cached result is an error.
    pub retry_errors: bool,
    /// Write `results.jsonl` instead of `results.csv`.
    pub json: bool,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub table: Vec<CellResult>,
    pub computed: usize,
    pub reused: usize,
    /// Files written, in a fixed order.
    pub outputs: Vec<PathBuf>,
    /// Input files read by at least one cell.
    pub inputs: Vec<PathBuf>,
}

impl SweepOutcome {
    pub fn errors(&self) -> usize {
        self.table.iter().filter(|c| c.error.is_some()).count()
    }
}

/// Cell key: hash of the parameters and of the digests of every input the
/// cell depends on.
pub fn cell_key(params: &RunParams, input_digest: &str) -> String {
    let json = serde_json::to_string(params).expect("params serialize");
    sha256_hex(format!("{json}\n{input_digest}").as_bytes())
}

/// Runs (or resumes) a sweep, writing `cells.jsonl`, the results table and
/// `summary.csv` into `out_dir`.
pub fn run_sweep(cfg: &SweepConfig, out_dir: &Path, opts: &SweepOptions) -> Result<SweepOutcome, SweepError> {
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let digests = InputDigests::new(cfg);
    let units = cfg.units();
    let keyed: Vec<Vec<String>> = units
        .iter()
        .map(|u| {
            u.cells
                .iter()
                .map(|p| cell_key(p, &digests.for_params(cfg, p)))
                .collect()
        })
        .collect();

    let log_path = out_dir.join(CELLS_FILE);
    let mut cache = read_cell_log(&log_path)?;
    if opts.retry_errors {
        cache.retain(|_, c| c.error.is_none());
    }
    let reused = keyed.iter().flatten().filter(|k| cache.contains_key(*k)).count();

    let pending: Vec<usize> = (0..units.len())
        .filter(|&i| keyed[i].iter().any(|k| !cache.contains_key(k)))
        .collect();
    let total_pending: usize = pending
        .iter()
        .map(|&i| keyed[i].iter().filter(|k| !cache.contains_key(*k)).count())
        .sum();
    log::info!(
        "sweep: {} cells, {} cached, {} to compute",
        keyed.iter().map(Vec::len).sum::<usize>(),
        reused,
        total_pending
    );

    let mut computed = 0;
    if !pending.is_empty() {
        let ctx = Context::new(cfg);
        let mut log = BufWriter::new(
            OpenOptions::new()
                .create(true)
                .append(true)
                .open(&log_path)
                .map_err(io_err(&log_path))?,
        );
        for chunk in pending.chunks(CHUNK) {
            let results: Vec<Vec<CellResult>> = chunk
                .par_iter()
                .map(|&i| {
                    let todo: Vec<bool> = keyed[i].iter().map(|k| !cache.contains_key(k)).collect();
                    ctx.run_unit(&units[i], &keyed[i], &todo)
                })
                .collect();
            for cell in results.into_iter().flatten() {
                let line = serde_json::to_string(&cell).expect("cell serializes");
                writeln!(log, "{line}").map_err(io_err(&log_path))?;
                computed += 1;
                cache.insert(cell.key.clone(), cell);
            }
            log.flush().map_err(io_err(&log_path))?;
        }
    }

    let table: Vec<CellResult> = keyed
        .iter()
        .flatten()
        .map(|k| cache[k].clone())
        .collect();

    let results_path = if opts.json {
        let p = out_dir.join(RESULTS_JSONL_FILE);
        write_results_jsonl(&p, &table)?;
        p
    } else {
        let p = out_dir.join(RESULTS_FILE);
        write_results_csv(&p, &table)?;
        p
    };
    let summary_path = out_dir.join(SUMMARY_FILE);
    write_summary_csv(&summary_path, &table, &cfg.bin_sizes)?;

    Ok(SweepOutcome {
        table,
        computed,
        reused,
        outputs: vec![results_path, summary_path],
        inputs: digests.paths(),
    })
}

fn read_cell_log(path: &Path) -> Result<HashMap<String, CellResult>, SweepError> {
    let mut cache = HashMap::new();
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(cache),
        Err(e) => return Err(io_err(path)(e)),
    };
    let mut offset = 0;
    let lines: Vec<&str> = text.split_inclusive('\n').collect();
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            offset += line.len();
            continue;
        }
        match serde_json::from_str::<CellResult>(line) {
            Ok(cell) if line.ends_with('\n') => {
                cache.insert(cell.key.clone(), cell);
            }
            // a torn final line from an interrupted run is dropped and recomputed
            _ if i + 1 == lines.len() => {
                log::warn!("dropping incomplete last line of {}", path.display());
                let file = OpenOptions::new().write(true).open(path).map_err(io_err(path))?;
                file.set_len(offset as u64).map_err(io_err(path))?;
                break;
            }
            Ok(_) => unreachable!("only the last line can lack a newline"),
            Err(e) => {
                return Err(SweepError::CellLog {
                    path: path.display().to_string(),
                    line: i + 1,
                    message: e.to_string(),
                })
            }
        }
        offset += line.len();
    }
    Ok(cache)
}

/// Content digests of the files each dataset and lexicon reads.
struct InputDigests {
    files: BTreeMap<PathBuf, String>,
}

impl InputDigests {
    fn new(cfg: &SweepConfig) -> Self {
        let mut files = BTreeMap::new();
        let paths = cfg
            .datasets
            .iter()
            .filter_map(|d| d.path.clone())
            .chain(cfg.lexicons.iter().filter_map(|l| l.path.clone()));
        for p in paths {
            // unreadable files surface later as per-cell errors
            let digest = fs::read(&p).map(|b| sha256_hex(&b)).unwrap_or_else(|_| "missing".into());
            files.insert(p, digest);
        }
        InputDigests { files }
    }

    fn paths(&self) -> Vec<PathBuf> {
        self.files
            .iter()
            .filter(|(_, d)| d.as_str() != "missing")
            .map(|(p, _)| p.clone())
            .collect()
    }

    /// Dataset and lexicon definitions plus file digests for one cell.
    fn for_params(&self, cfg: &SweepConfig, p: &RunParams) -> String {
        let mut parts = Vec::new();
        if let Some(d) = cfg.datasets.iter().find(|d| d.id == p.dataset) {
            parts.push(serde_json::to_string(d).expect("entry serializes"));
            if let Some(path) = &d.path {
                parts.push(self.files[path].clone());
            }
        }
        if let Some(id) = &p.lexicon {
            let mut ids = vec![id.clone()];
            if p.fallback {
                if let Some(l) = find_lexicon(cfg, id) {
                    ids.extend(l.0.fallback.iter().cloned());
                }
            }
            for id in ids {
                if let Some((l, _)) = find_lexicon(cfg, &id) {
                    parts.push(serde_json::to_string(l).expect("entry serializes"));
                    if let Some(path) = &l.path {
                        parts.push(self.files[path].clone());
                    }
                }
            }
        }
        parts.join("\n")
    }
}

/// The entry defining lexicon `id`, and the binarization if `id` is derived.
fn find_lexicon<'a>(cfg: &'a SweepConfig, id: &str) -> Option<(&'a LexiconEntry, Option<&'a BinarizeEntry>)> {
    cfg.lexicons.iter().find_map(|l| {
        if l.id == id {
            Some((l, None))
        } else {
            l.binarize.as_ref().filter(|b| b.id == id).map(|b| (l, Some(b)))
        }
    })
}

struct Prepared {
    stream: LabeledStream,
    tokens: Vec<Vec<String>>,
}

/// Lazily materialized datasets and lexicons shared by all workers.
struct Context<'a> {
    cfg: &'a SweepConfig,
    datasets: std::sync::Mutex<HashMap<(usize, Option<u64>), std::sync::Arc<Result<Prepared, String>>>>,
    lexicons: std::sync::Mutex<HashMap<String, std::sync::Arc<Result<Lexicon, String>>>>,
}

impl<'a> Context<'a> {
    fn new(cfg: &'a SweepConfig) -> Self {
        Context {
            cfg,
            datasets: Default::default(),
            lexicons: Default::default(),
        }
    }

    // Entries are built outside the lock; a racing duplicate build is
    // deterministic, so whichever lands first is kept.
    fn dataset(&self, index: usize, seed: Option<u64>) -> std::sync::Arc<Result<Prepared, String>> {
        if let Some(d) = self.datasets.lock().unwrap().get(&(index, seed)) {
            return d.clone();
        }
        let built = std::sync::Arc::new(build_dataset(&self.cfg.datasets[index], seed));
        self.datasets
            .lock()
            .unwrap()
            .entry((index, seed))
            .or_insert(built)
            .clone()
    }

    fn lexicon(&self, id: &str) -> std::sync::Arc<Result<Lexicon, String>> {
        if let Some(l) = self.lexicons.lock().unwrap().get(id) {
            return l.clone();
        }
        let built = std::sync::Arc::new(build_lexicon(self.cfg, id));
        self.lexicons
            .lock()
            .unwrap()
            .entry(id.to_string())
            .or_insert(built)
            .clone()
    }

    fn run_unit(&self, unit: &Unit, keys: &[String], todo: &[bool]) -> Vec<CellResult> {
        let base = &unit.cells[0];
        let fail = |message: String| -> Vec<CellResult> {
            unit.cells
                .iter()
                .zip(keys)
                .zip(todo)
                .filter(|(_, &t)| t)
                .map(|((p, k), _)| CellResult {
                    key: k.clone(),
                    params: p.clone(),
                    rho: None,
                    n_points: 0,
                    n_excluded: 0,
                    error: Some(message.clone()),
                })
                .collect()
        };
        let data = self.dataset(unit.dataset, base.seed);
        let data = match data.as_ref() {
            Ok(d) => d,
            Err(e) => return fail(e.clone()),
        };
        let golds = match data.stream.golds() {
            Ok(g) => g,
            Err(e) => return fail(e.to_string()),
        };
        let predictor = match self.predictor(unit, data, &golds) {
            Ok(p) => p,
            Err(e) => return fail(e),
        };
        let mode = base.bin_mode.unwrap_or(BinMode::Rolling);
        unit.cells
            .iter()
            .zip(keys)
            .zip(todo)
            .filter(|(_, &t)| t)
            .map(|((p, k), _)| {
                let outcome = BinSpec::new(p.bin_size, mode)
                    .map_err(|e| e.to_string())
                    .and_then(|bin| {
                        let pred = predictor.arc(bin).map_err(|e| e.to_string())?;
                        let gold = label_arc(&golds, bin).map_err(|e| e.to_string())?;
                        evaluate(&pred, &gold, p.clone()).map_err(|e| e.to_string())
                    });
                match outcome {
                    Ok(r) => CellResult {
                        key: k.clone(),
                        params: p.clone(),
                        rho: Some(r.rho),
                        n_points: r.n_points,
                        n_excluded: r.n_excluded,
                        error: None,
                    },
                    Err(e) => CellResult {
                        key: k.clone(),
                        params: p.clone(),
                        rho: None,
                        n_points: 0,
                        n_excluded: 0,
                        error: Some(e),
                    },
                }
            })
            .collect()
    }

    fn predictor(&self, unit: &Unit, data: &Prepared, golds: &[f64]) -> Result<Predictor, String> {
        let p = &unit.cells[0];
        if p.method == "oracle" {
            let d = &self.cfg.datasets[unit.dataset];
            let labels = match &d.labels {
                Some(s) => parse_label_set(s).map_err(|e| e.to_string())?,
                None => golds.to_vec(),
            };
            let cfg = OracleConfig::new(p.accuracy.unwrap_or(1.0), labels, p.seed.unwrap_or(0))
                .map_err(|e| e.to_string())?;
            return Ok(Predictor::Labels(oracle_predict(golds, &cfg).map_err(|e| e.to_string())?));
        }
        let id = p.lexicon.as_deref().expect("lexicon cells name a lexicon");
        let mut ids = vec![id.to_string()];
        if p.fallback {
            let (entry, _) = find_lexicon(self.cfg, id).expect("validated id");
            ids.extend(entry.fallback.iter().cloned());
        }
        let mut lexicons = Vec::new();
        for id in &ids {
            match self.lexicon(id).as_ref() {
                Ok(l) => lexicons.push(l.clone()),
                Err(e) => return Err(e.clone()),
            }
        }
        let mut chain = FallbackChain::new(lexicons).map_err(|e| e.to_string())?;
        let t = p.threshold.unwrap_or(0.0);
        if t > 0.0 {
            chain = chain.apply_threshold(ThresholdFilter::new(t).map_err(|e| e.to_string())?);
        }
        let oov = p.oov.unwrap_or(OovPolicy::Skip);
        let scored = data
            .tokens
            .par_iter()
            .map(|toks| score_instance(toks, &chain, oov))
            .collect();
        Ok(Predictor::Scores {
            scored,
            oov,
            pooling: p.pooling.unwrap_or_default(),
        })
    }
}

enum Predictor {
    Labels(Vec<f64>),
    Scores {
        scored: Vec<crate::text::ScoredInstance>,
        oov: OovPolicy,
        pooling: Pooling,
    },
}

impl Predictor {
    fn arc(&self, bin: BinSpec) -> Result<crate::arcs::EmotionArc, crate::arcs::ArcError> {
        match self {
            Predictor::Labels(l) => label_arc(l, bin),
            Predictor::Scores { scored, oov, pooling } => arc_from_scores(scored, *oov, *pooling, bin),
        }
    }
}

fn build_dataset(d: &DatasetEntry, seed: Option<u64>) -> Result<Prepared, String> {
    let mut stream = if let Some(spec) = &d.synthetic {
        let spec = CorpusSpec {
            seed: seed.unwrap_or(spec.seed),
            ..spec.clone()
        };
        generate(&spec).stream
    } else {
        let path = d.path.as_ref().expect("validated entry");
        let mut schema = DatasetSchema::default();
        if let Some(c) = &d.text_column {
            schema.text_column = Column::from(c.as_str());
        }
        if let Some(c) = &d.label_column {
            schema.label_column = Some(Column::from(c.as_str()));
        }
        schema.delimiter = d.delimiter.as_ref().map(|s| s.as_bytes()[0]);
        if let Some(h) = d.has_header {
            schema.has_header = h;
        }
        load_dataset(path, &schema).map_err(|e| e.to_string())?
    };
    if let Some(wave) = &d.dynamic {
        let spec = WaveSpec {
            seed: seed.unwrap_or(wave.seed),
            ..wave.clone()
        };
        stream = synthesize_dynamic(&stream, &spec).map_err(|e| e.to_string())?.stream;
    } else if d.order_by_gold {
        stream = stream.order_by_gold().map_err(|e| e.to_string())?;
    }
    let tokens = stream
        .instances()
        .par_iter()
        .map(|i| analyze(&i.text, PreprocessOptions::default()))
        .collect();
    Ok(Prepared { stream, tokens })
}

fn build_lexicon(cfg: &SweepConfig, id: &str) -> Result<Lexicon, String> {
    let (entry, binarize) = find_lexicon(cfg, id).ok_or_else(|| format!("unknown lexicon {id:?}"))?;
    let base = if let Some(which) = &entry.synthetic {
        let corpus = generate(&CorpusSpec {
            n_instances: 0,
            vocab_size: entry.vocab_size.unwrap_or(CorpusSpec::default().vocab_size),
            ..CorpusSpec::default()
        });
        let lex = match which.as_str() {
            "primary" => corpus.primary,
            "secondary" => corpus.secondary,
            other => return Err(format!("unknown synthetic lexicon {other:?}")),
        };
        Lexicon::from_entries(
            entry.id.clone(),
            entry.emotion.clone(),
            lex.kind(),
            lex.range(),
            None,
            lex.iter(),
        )
        .map_err(|e| e.to_string())?
    } else {
        let range: ScoreRange = entry
            .range
            .as_deref()
            .expect("validated entry")
            .parse()
            .map_err(|e: crate::lexicon::LexiconError| e.to_string())?;
        let mut opts = LoadOptions::new(entry.kind, entry.emotion.clone(), range);
        opts.labels = entry.labels.clone();
        opts.has_header = entry.has_header;
        opts.name = Some(entry.id.clone());
        if let Some(c) = entry.score_column {
            opts.score_column = c;
        }
        load_lexicon(entry.path.as_ref().expect("validated entry"), &opts).map_err(|e| e.to_string())?
    };
    match binarize {
        None => Ok(base),
        Some(b) => base
            .binarize(&b.cutoffs, &b.labels)
            .map(|l| l.renamed(b.id.clone()))
            .map_err(|e| e.to_string()),
    }
}

const COLUMNS: [&str; 13] = [
    "dataset", "emotion", "method", "lexicon", "kind", "oov", "pooling", "threshold", "accuracy", "fallback",
    "seed", "bin_mode", "bin_size",
];

fn param_fields(p: &RunParams) -> Vec<String> {
    fn opt<T: ToString>(v: &Option<T>) -> String {
        v.as_ref().map(T::to_string).unwrap_or_default()
    }
    vec![
        p.dataset.clone(),
        p.emotion.clone(),
        p.method.clone(),
        opt(&p.lexicon),
        opt(&p.kind),
        opt(&p.oov),
        opt(&p.pooling),
        opt(&p.threshold),
        opt(&p.accuracy),
        p.fallback.to_string(),
        opt(&p.seed),
        opt(&p.bin_mode),
        p.bin_size.to_string(),
    ]
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> SweepError + '_ {
    move |e| SweepError::Io {
        path: path.display().to_string(),
        source: e.into(),
    }
}

/// Long-form table: one row per cell.
pub fn write_results_csv(path: &Path, table: &[CellResult]) -> Result<(), SweepError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    let mut header: Vec<&str> = COLUMNS.to_vec();
    header.extend(["rho", "n_points", "n_excluded", "tie_method", "error", "key"]);
    w.write_record(&header).map_err(csv_err(path))?;
    for c in table {
        let mut row = param_fields(&c.params);
        row.push(c.rho.map(|r| r.to_string()).unwrap_or_default());
        row.push(c.n_points.to_string());
        row.push(c.n_excluded.to_string());
        row.push(TIE_METHOD.into());
        row.push(c.error.clone().unwrap_or_default());
        row.push(c.key.clone());
        w.write_record(&row).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn write_results_jsonl(path: &Path, table: &[CellResult]) -> Result<(), SweepError> {
    let mut w = BufWriter::new(File::create(path).map_err(io_err(path))?);
    for c in table {
        let line = serde_json::to_string(c).expect("cell serializes");
        writeln!(w, "{line}").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Pivoted table: one row per parameter combination, one rho column per
/// bin size. Errored cells are left empty.
pub fn write_summary_csv(path: &Path, table: &[CellResult], bin_sizes: &[usize]) -> Result<(), SweepError> {
    let mut rows: Vec<(Vec<String>, BTreeMap<usize, Option<f64>>)> = Vec::new();
    let mut index: HashMap<Vec<String>, usize> = HashMap::new();
    for c in table {
        let mut fields = param_fields(&c.params);
        fields.pop();
        let i = *index.entry(fields.clone()).or_insert_with(|| {
            rows.push((fields, BTreeMap::new()));
            rows.len() - 1
        });
        rows[i].1.insert(c.params.bin_size, c.rho);
    }
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    let mut header: Vec<String> = COLUMNS[..COLUMNS.len() - 1].iter().map(|s| s.to_string()).collect();
    header.extend(bin_sizes.iter().map(|b| format!("B{b}")));
    w.write_record(&header).map_err(csv_err(path))?;
    for (fields, by_bin) in rows {
        let mut row = fields;
        row.extend(
            bin_sizes
                .iter()
                .map(|b| by_bin.get(b).copied().flatten().map(|r| format!("{r:.4}")).unwrap_or_default()),
        );
        w.write_record(&row).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}
