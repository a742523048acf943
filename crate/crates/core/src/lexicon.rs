//! Emotion lexicons: loading, validation, threshold filtering, categorical
//! rendering of real-valued lexicons, and fallback chains for code-switched
//! text.
//!
//! Lexicon files are UTF-8 TSV with one `term<TAB>score` entry per line.
//! Lines starting with `#` and blank lines are ignored. Terms are normalized
//! by trimming and lowercasing before insertion, so lookups must use the same
//! [`normalize_term`] rule.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

const LABEL_EPS: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("cannot read lexicon {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed entry {content:?} (expected term<TAB>score)")]
    Malformed { line: usize, content: String },
    #[error("line {line}: score {score} for {term:?} outside range {range}")]
    OutOfRange {
        line: usize,
        term: String,
        score: f64,
        range: ScoreRange,
    },
    #[error("line {line}: score {score} for {term:?} is not a declared label of a categorical lexicon")]
    NotALabel { line: usize, term: String, score: f64 },
    #[error("line {line}: term {term:?} already has score {first}, conflicting score {second}")]
    Conflict {
        line: usize,
        term: String,
        first: f64,
        second: f64,
    },
    #[error("lexicon has no entries")]
    Empty,
    #[error("invalid score range: {0}")]
    InvalidRange(String),
    #[error("invalid label set: {0}")]
    InvalidLabels(String),
    #[error("invalid threshold {0}: must be finite and >= 0")]
    InvalidThreshold(f64),
    #[error("invalid cutoffs: {0}")]
    InvalidCutoffs(String),
    #[error("binarize requires a continuous lexicon, {0:?} is categorical")]
    NotContinuous(String),
    #[error("fallback chain must contain at least one lexicon")]
    EmptyChain,
    #[error("lexicon {name:?} is incompatible with the chain: {reason}")]
    IncompatibleChain { name: String, reason: String },
}

/// Whether a lexicon carries a finite label set or real-valued scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LexiconKind {
    #[serde(alias = "cat")]
    Categorical,
    #[serde(alias = "cont")]
    Continuous,
}

impl fmt::Display for LexiconKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LexiconKind::Categorical => "categorical",
            LexiconKind::Continuous => "continuous",
        })
    }
}

impl FromStr for LexiconKind {
    type Err = LexiconError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "cat" | "categorical" => Ok(LexiconKind::Categorical),
            "cont" | "continuous" | "real" => Ok(LexiconKind::Continuous),
            other => Err(LexiconError::InvalidLabels(format!(
                "unknown lexicon kind {other:?} (expected cat or cont)"
            ))),
        }
    }
}

/// Closed interval `[lo, hi]` of admissible scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreRange {
    pub lo: f64,
    pub hi: f64,
}

impl ScoreRange {
    pub fn new(lo: f64, hi: f64) -> Result<Self, LexiconError> {
        if !lo.is_finite() || !hi.is_finite() || lo > hi {
            return Err(LexiconError::InvalidRange(format!("[{lo}, {hi}]")));
        }
        Ok(ScoreRange { lo, hi })
    }

    pub fn contains(&self, score: f64) -> bool {
        score >= self.lo && score <= self.hi
    }

    /// Largest absolute score admitted by the range.
    pub fn max_abs(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }
}

impl fmt::Display for ScoreRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.lo, self.hi)
    }
}

impl FromStr for ScoreRange {
    type Err = LexiconError;

    /// Parses `lo..hi` or `lo:hi`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || LexiconError::InvalidRange(s.to_string());
        let (lo, hi) = s
            .split_once("..")
            .or_else(|| s.split_once(':'))
            .ok_or_else(bad)?;
        let lo = lo.trim().parse::<f64>().map_err(|_| bad())?;
        let hi = hi.trim().parse::<f64>().map_err(|_| bad())?;
        ScoreRange::new(lo, hi)
    }
}

/// Canonical form of a lexicon term or text token.
pub fn normalize_term(term: &str) -> String {
    term.trim().to_lowercase()
}

/// A term-to-score table for one emotion.
#[derive(Debug, Clone, PartialEq)]
pub struct Lexicon {
    name: String,
    emotion: String,
    kind: LexiconKind,
    range: ScoreRange,
    /// Declared label set; empty for continuous lexicons.
    labels: Vec<f64>,
    entries: HashMap<String, f64>,
}

impl Lexicon {
    /// Builds a validated lexicon from in-memory entries.
    ///
    /// For categorical lexicons with `labels = None` the label set defaults
    /// to the integers inside `range` (so `0..1` gives `{0, 1}` and `-1..1`
    /// gives `{-1, 0, 1}`).
    pub fn from_entries<I, S>(
        name: impl Into<String>,
        emotion: impl Into<String>,
        kind: LexiconKind,
        range: ScoreRange,
        labels: Option<Vec<f64>>,
        entries: I,
    ) -> Result<Self, LexiconError>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: AsRef<str>,
    {
        let mut builder = Builder::new(kind, range, labels)?;
        for (i, (term, score)) in entries.into_iter().enumerate() {
            builder.insert(i + 1, term.as_ref(), score)?;
        }
        builder.finish(name.into(), emotion.into())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn emotion(&self) -> &str {
        &self.emotion
    }

    pub fn kind(&self) -> LexiconKind {
        self.kind
    }

    pub fn range(&self) -> ScoreRange {
        self.range
    }

    /// Declared label set (empty for continuous lexicons).
    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Score of an already-normalized term.
    pub fn get(&self, term: &str) -> Option<f64> {
        self.entries.get(term).copied()
    }

    pub fn contains(&self, term: &str) -> bool {
        self.entries.contains_key(term)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Entries sorted by term.
    pub fn sorted_entries(&self) -> Vec<(&str, f64)> {
        let mut v: Vec<_> = self.iter().collect();
        v.sort_by(|a, b| a.0.cmp(b.0));
        v
    }

    /// SHA-256 over the sorted `term\tscore\n` rendering of the entries.
    pub fn checksum(&self) -> String {
        let mut hasher = Sha256::new();
        for (term, score) in self.sorted_entries() {
            hasher.update(term.as_bytes());
            hasher.update(b"\t");
            hasher.update(score.to_bits().to_le_bytes());
            hasher.update(b"\n");
        }
        hex::encode(hasher.finalize())
    }

    /// Returns a copy of this lexicon under another name.
    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Keeps only the entries with `|score| > min_abs_score`.
    pub fn apply_threshold(&self, filter: ThresholdFilter) -> Lexicon {
        let t = filter.min_abs_score();
        let entries: HashMap<String, f64> = self
            .entries
            .iter()
            .filter(|(_, s)| s.abs() > t)
            .map(|(k, v)| (k.clone(), *v))
            .collect();
        if entries.is_empty() {
            log::warn!(
                "threshold {t} removed every entry of lexicon {:?}",
                self.name
            );
        }
        Lexicon {
            name: self.name.clone(),
            emotion: self.emotion.clone(),
            kind: self.kind,
            range: self.range,
            labels: self.labels.clone(),
            entries,
        }
    }

    /// Maps each score to the label of its cutoff interval.
    ///
    /// With cutoffs `c_0 < c_1 < ... < c_{k-1}` a score `s` receives
    /// `labels[i]` where `i` is the number of cutoffs `<= s`; i.e. intervals
    /// are closed on the left: `(-inf, c_0)`, `[c_0, c_1)`, ..., `[c_{k-1}, inf)`.
    pub fn binarize(&self, cutoffs: &[f64], labels: &[f64]) -> Result<Lexicon, LexiconError> {
        if self.kind != LexiconKind::Continuous {
            return Err(LexiconError::NotContinuous(self.name.clone()));
        }
        if labels.len() != cutoffs.len() + 1 {
            return Err(LexiconError::InvalidCutoffs(format!(
                "{} cutoffs need {} labels, got {}",
                cutoffs.len(),
                cutoffs.len() + 1,
                labels.len()
            )));
        }
        if labels.iter().any(|l| !l.is_finite()) {
            return Err(LexiconError::InvalidLabels("labels must be finite".into()));
        }
        if cutoffs.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(LexiconError::InvalidCutoffs(
                "cutoffs must be strictly increasing".into(),
            ));
        }
        if let Some(c) = cutoffs.iter().find(|c| !self.range.contains(**c)) {
            return Err(LexiconError::InvalidCutoffs(format!(
                "cutoff {c} outside score range {}",
                self.range
            )));
        }
        let entries = self
            .entries
            .iter()
            .map(|(term, &s)| {
                let i = cutoffs.partition_point(|&c| c <= s);
                (term.clone(), labels[i])
            })
            .collect();
        let mut label_set = labels.to_vec();
        label_set.sort_by(f64::total_cmp);
        label_set.dedup();
        let range = ScoreRange::new(label_set[0], *label_set.last().unwrap())?;
        Ok(Lexicon {
            name: self.name.clone(),
            emotion: self.emotion.clone(),
            kind: LexiconKind::Categorical,
            range,
            labels: label_set,
            entries,
        })
    }

    /// Counts of scores per bucket. Categorical lexicons get one bucket per
    /// label; continuous lexicons get `buckets` equal-width buckets over the
    /// score range.
    pub fn histogram(&self, buckets: usize) -> Vec<HistogramBucket> {
        match self.kind {
            LexiconKind::Categorical => self
                .labels
                .iter()
                .map(|&l| HistogramBucket {
                    lo: l,
                    hi: l,
                    count: self
                        .entries
                        .values()
                        .filter(|&&s| (s - l).abs() < LABEL_EPS)
                        .count(),
                })
                .collect(),
            LexiconKind::Continuous => {
                let buckets = buckets.max(1);
                let width = (self.range.hi - self.range.lo) / buckets as f64;
                let mut counts = vec![0usize; buckets];
                for &s in self.entries.values() {
                    let i = if width > 0.0 {
                        (((s - self.range.lo) / width) as usize).min(buckets - 1)
                    } else {
                        0
                    };
                    counts[i] += 1;
                }
                counts
                    .into_iter()
                    .enumerate()
                    .map(|(i, count)| HistogramBucket {
                        lo: self.range.lo + width * i as f64,
                        hi: self.range.lo + width * (i + 1) as f64,
                        count,
                    })
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistogramBucket {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

/// Keeps entries whose absolute score exceeds a minimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdFilter {
    min_abs_score: f64,
}

impl ThresholdFilter {
    pub fn new(min_abs_score: f64) -> Result<Self, LexiconError> {
        if !min_abs_score.is_finite() || min_abs_score < 0.0 {
            return Err(LexiconError::InvalidThreshold(min_abs_score));
        }
        Ok(ThresholdFilter { min_abs_score })
    }

    pub fn min_abs_score(&self) -> f64 {
        self.min_abs_score
    }
}

/// How a lexicon file should be read.
#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub kind: LexiconKind,
    pub emotion: String,
    pub range: ScoreRange,
    /// Label set for categorical lexicons; defaults to the integers in `range`.
    pub labels: Option<Vec<f64>>,
    /// Zero-based column holding the score (the term is always column 0).
    pub score_column: usize,
    /// Skip the first non-comment line.
    pub has_header: bool,
    /// Lexicon name; defaults to the file stem.
    pub name: Option<String>,
}

impl LoadOptions {
    pub fn new(kind: LexiconKind, emotion: impl Into<String>, range: ScoreRange) -> Self {
        LoadOptions {
            kind,
            emotion: emotion.into(),
            range,
            labels: None,
            score_column: 1,
            has_header: false,
            name: None,
        }
    }
}

/// Diagnostics gathered while loading a lexicon file.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LoadReport {
    pub lines: usize,
    pub comment_lines: usize,
    /// Terms repeated with an identical score: `(term, line)` of each repeat.
    pub duplicates: Vec<(String, usize)>,
    /// Entries containing whitespace; they are kept but never match a token.
    pub multiword_entries: usize,
}

/// Loads and validates a TSV lexicon.
pub fn load_lexicon(path: impl AsRef<Path>, opts: &LoadOptions) -> Result<Lexicon, LexiconError> {
    load_lexicon_with_report(path, opts).map(|(lex, _)| lex)
}

pub fn load_lexicon_with_report(
    path: impl AsRef<Path>,
    opts: &LoadOptions,
) -> Result<(Lexicon, LoadReport), LexiconError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| LexiconError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let name = opts.name.clone().unwrap_or_else(|| {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "lexicon".into())
    });
    let (lex, report) = parse_lexicon(&text, name, opts)?;
    log::info!("loaded lexicon {:?}: {} entries", lex.name(), lex.len());
    Ok((lex, report))
}

/// Parses lexicon text (the contents of a TSV file).
pub fn parse_lexicon(
    text: &str,
    name: String,
    opts: &LoadOptions,
) -> Result<(Lexicon, LoadReport), LexiconError> {
    let mut builder = Builder::new(opts.kind, opts.range, opts.labels.clone())?;
    let mut header_pending = opts.has_header;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        builder.report.lines += 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            builder.report.comment_lines += 1;
            continue;
        }
        if header_pending {
            header_pending = false;
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let malformed = || LexiconError::Malformed {
            line: line_no,
            content: line.to_string(),
        };
        if fields.len() <= opts.score_column || (opts.score_column == 1 && fields.len() != 2) {
            return Err(malformed());
        }
        let term = fields[0];
        if term.trim().is_empty() {
            return Err(malformed());
        }
        let score: f64 = fields[opts.score_column]
            .trim()
            .parse()
            .map_err(|_| malformed())?;
        if !score.is_finite() {
            return Err(malformed());
        }
        builder.insert(line_no, term, score)?;
    }
    let report = builder.report.clone();
    Ok((builder.finish(name, opts.emotion.clone())?, report))
}

struct Builder {
    kind: LexiconKind,
    range: ScoreRange,
    labels: Vec<f64>,
    entries: HashMap<String, f64>,
    report: LoadReport,
}

impl Builder {
    fn new(
        kind: LexiconKind,
        range: ScoreRange,
        labels: Option<Vec<f64>>,
    ) -> Result<Self, LexiconError> {
        let labels = match kind {
            LexiconKind::Continuous => Vec::new(),
            LexiconKind::Categorical => {
                let mut labels = labels.unwrap_or_else(|| {
                    let lo = range.lo.ceil() as i64;
                    let hi = range.hi.floor() as i64;
                    (lo..=hi).map(|v| v as f64).collect()
                });
                labels.sort_by(f64::total_cmp);
                labels.dedup();
                if labels.is_empty() {
                    return Err(LexiconError::InvalidLabels(format!(
                        "categorical lexicon over {range} has no labels"
                    )));
                }
                if let Some(l) = labels.iter().find(|l| !range.contains(**l)) {
                    return Err(LexiconError::InvalidLabels(format!(
                        "label {l} outside range {range}"
                    )));
                }
                labels
            }
        };
        Ok(Builder {
            kind,
            range,
            labels,
            entries: HashMap::new(),
            report: LoadReport::default(),
        })
    }

    fn insert(&mut self, line: usize, term: &str, score: f64) -> Result<(), LexiconError> {
        let term = normalize_term(term);
        if !score.is_finite() || !self.range.contains(score) {
            return Err(LexiconError::OutOfRange {
                line,
                term,
                score,
                range: self.range,
            });
        }
        let score = if self.kind == LexiconKind::Categorical {
            // snap to the declared label so equality checks stay exact
            match self.labels.iter().find(|l| (**l - score).abs() < LABEL_EPS) {
                Some(&l) => l,
                None => return Err(LexiconError::NotALabel { line, term, score }),
            }
        } else {
            score
        };
        if let Some(&first) = self.entries.get(&term) {
            if first == score {
                log::warn!("line {line}: duplicate entry {term:?} with identical score");
                self.report.duplicates.push((term, line));
                return Ok(());
            }
            return Err(LexiconError::Conflict {
                line,
                term,
                first,
                second: score,
            });
        }
        if term.contains(char::is_whitespace) {
            self.report.multiword_entries += 1;
        }
        self.entries.insert(term, score);
        Ok(())
    }

    fn finish(self, name: String, emotion: String) -> Result<Lexicon, LexiconError> {
        if self.entries.is_empty() {
            return Err(LexiconError::Empty);
        }
        Ok(Lexicon {
            name,
            emotion,
            kind: self.kind,
            range: self.range,
            labels: self.labels,
            entries: self.entries,
        })
    }
}

/// Result of a chain lookup.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub score: f64,
    /// Index of the lexicon in the chain that supplied the score.
    pub source: usize,
}

/// Ordered list of lexicons consulted in turn; the first one containing a
/// term supplies its score.
#[derive(Debug, Clone)]
pub struct FallbackChain {
    lexicons: Vec<Lexicon>,
}

impl FallbackChain {
    /// Lexicons must share the emotion and the score range.
    pub fn new(lexicons: Vec<Lexicon>) -> Result<Self, LexiconError> {
        let first = lexicons.first().ok_or(LexiconError::EmptyChain)?;
        for lex in &lexicons[1..] {
            if lex.emotion != first.emotion {
                return Err(LexiconError::IncompatibleChain {
                    name: lex.name.clone(),
                    reason: format!("emotion {:?} != {:?}", lex.emotion, first.emotion),
                });
            }
            let (a, b) = (lex.range, first.range);
            if (a.lo - b.lo).abs() > 1e-12 || (a.hi - b.hi).abs() > 1e-12 {
                return Err(LexiconError::IncompatibleChain {
                    name: lex.name.clone(),
                    reason: format!("score range {a} != {b}"),
                });
            }
        }
        Ok(FallbackChain { lexicons })
    }

    pub fn single(lexicon: Lexicon) -> Self {
        FallbackChain {
            lexicons: vec![lexicon],
        }
    }

    pub fn lexicons(&self) -> &[Lexicon] {
        &self.lexicons
    }

    pub fn len(&self) -> usize {
        self.lexicons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lexicons.is_empty()
    }

    pub fn emotion(&self) -> &str {
        &self.lexicons[0].emotion
    }

    /// Looks up an already-normalized term.
    pub fn lookup(&self, term: &str) -> Option<Hit> {
        self.lexicons
            .iter()
            .enumerate()
            .find_map(|(source, lex)| lex.get(term).map(|score| Hit { score, source }))
    }

    /// Applies the same threshold to every lexicon in the chain.
    pub fn apply_threshold(&self, filter: ThresholdFilter) -> FallbackChain {
        FallbackChain {
            lexicons: self
                .lexicons
                .iter()
                .map(|l| l.apply_threshold(filter))
                .collect(),
        }
    }
}

/// Writes `term<TAB>score` lines in term order; [`parse_lexicon`] reads them
/// back unchanged.
pub fn write_lexicon<W: std::io::Write>(mut out: W, lex: &Lexicon) -> std::io::Result<()> {
    for (term, score) in lex.sorted_entries() {
        writeln!(out, "{term}\t{score}")?;
    }
    out.flush()
}
