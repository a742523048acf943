//! Emotion arcs: binning labeled or scored streams into time series.
//!
//! An arc over a stream of `N` instances with bin size `B` has `N - B + 1`
//! points in rolling mode and `floor(N / B)` points in tumbling mode. Each
//! point is positioned at the index of the first instance in its window.

mod dataset;
mod io;
pub mod window;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dataset::{
    load_dataset, parse_dataset, parse_label, write_dataset, Column, DatasetSchema,
    LabeledInstance, LabeledStream,
};
pub use io::{read_arc, read_arc_csv, write_arc_csv, write_arc_jsonl};

use crate::lexicon::FallbackChain;
use crate::text::{score_texts, OovPolicy, PreprocessOptions, ScoredInstance};
use window::windowed_ratio;

#[derive(Debug, Error)]
pub enum ArcError {
    #[error("bin size must be at least 1 (got {0})")]
    ZeroBin(usize),
    #[error("bin size {bin} exceeds stream length {len}")]
    BinTooLarge { bin: usize, len: usize },
    #[error("stream is empty")]
    EmptyStream,
    #[error("instance {0} has no gold label")]
    MissingGold(usize),
    #[error("every point of the arc is missing")]
    AllMissing,
    #[error("standardization needs at least 2 present points, found {0}")]
    TooFewPoints(usize),
    #[error("zero variance: cannot standardize a constant arc")]
    ZeroVariance,
    #[error("cannot read {0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error("missing column {0}")]
    MissingColumn(String),
    #[error("line {line}: unparseable label {value:?}")]
    BadLabel { line: usize, value: String },
    #[error("no instances in dataset")]
    NoInstances,
    #[error("dataset: {0}")]
    Dataset(String),
    #[error("arc file: {0}")]
    ArcFile(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BinMode {
    /// Window advances one instance at a time.
    Rolling,
    /// Non-overlapping windows.
    Tumbling,
}

impl fmt::Display for BinMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BinMode::Rolling => "rolling",
            BinMode::Tumbling => "tumbling",
        })
    }
}

impl FromStr for BinMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "rolling" => Ok(BinMode::Rolling),
            "tumbling" => Ok(BinMode::Tumbling),
            other => Err(format!("unknown bin mode {other:?} (expected rolling or tumbling)")),
        }
    }
}

/// Bin size and stepping mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BinSpec {
    size: usize,
    mode: BinMode,
}

impl BinSpec {
    pub fn new(size: usize, mode: BinMode) -> Result<Self, ArcError> {
        if size == 0 {
            return Err(ArcError::ZeroBin(size));
        }
        Ok(BinSpec { size, mode })
    }

    pub fn rolling(size: usize) -> Result<Self, ArcError> {
        Self::new(size, BinMode::Rolling)
    }

    pub fn tumbling(size: usize) -> Result<Self, ArcError> {
        Self::new(size, BinMode::Tumbling)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn mode(&self) -> BinMode {
        self.mode
    }

    fn check(&self, len: usize) -> Result<(), ArcError> {
        if len == 0 {
            return Err(ArcError::EmptyStream);
        }
        if self.size > len {
            return Err(ArcError::BinTooLarge { bin: self.size, len });
        }
        Ok(())
    }
}

/// How word scores are pooled into a bin value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pooling {
    /// Mean of the per-instance scores in the window.
    #[default]
    #[serde(alias = "instance")]
    InstanceMean,
    /// Mean over all scored tokens in the window.
    #[serde(alias = "word")]
    WordPooled,
}

impl fmt::Display for Pooling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pooling::InstanceMean => "instance",
            Pooling::WordPooled => "word",
        })
    }
}

impl FromStr for Pooling {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "instance" | "instancemean" | "instance-mean" => Ok(Pooling::InstanceMean),
            "word" | "wordpooled" | "word-pooled" => Ok(Pooling::WordPooled),
            other => Err(format!("unknown pooling {other:?} (expected instance or word)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArcPoint {
    pub position: usize,
    pub value: Option<f64>,
}

/// An ordered series of bin values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmotionArc {
    points: Vec<ArcPoint>,
    bin: BinSpec,
    standardized: bool,
}

impl EmotionArc {
    pub fn new(points: Vec<ArcPoint>, bin: BinSpec, standardized: bool) -> Self {
        EmotionArc {
            points,
            bin,
            standardized,
        }
    }

    /// Positions `window_start(0..)` paired with `values`.
    pub fn from_values(values: Vec<Option<f64>>, bin: BinSpec) -> Self {
        let points = values
            .into_iter()
            .enumerate()
            .map(|(k, value)| ArcPoint {
                position: window::window_start(k, bin),
                value,
            })
            .collect();
        EmotionArc::new(points, bin, false)
    }

    pub fn points(&self) -> &[ArcPoint] {
        &self.points
    }

    pub fn bin(&self) -> BinSpec {
        self.bin
    }

    pub fn is_standardized(&self) -> bool {
        self.standardized
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn values(&self) -> Vec<Option<f64>> {
        self.points.iter().map(|p| p.value).collect()
    }

    /// Values of present points, in order.
    pub fn present_values(&self) -> Vec<f64> {
        self.points.iter().filter_map(|p| p.value).collect()
    }

    pub fn missing_count(&self) -> usize {
        self.points.iter().filter(|p| p.value.is_none()).count()
    }

    /// Z-scores present values with the population standard deviation.
    pub fn standardize(&self) -> Result<EmotionArc, ArcError> {
        let present = self.present_values();
        let (mean, std) = mean_std(&present)?;
        let points = self
            .points
            .iter()
            .map(|p| ArcPoint {
                position: p.position,
                value: p.value.map(|v| (v - mean) / std),
            })
            .collect();
        Ok(EmotionArc::new(points, self.bin, true))
    }
}

/// Mean and population standard deviation of values, failing on fewer than
/// two values or (numerically) zero spread.
pub fn mean_std(values: &[f64]) -> Result<(f64, f64), ArcError> {
    if values.len() < 2 {
        return Err(ArcError::TooFewPoints(values.len()));
    }
    let n = values.len() as f64;
    let mut acc = window::CompensatedSum::default();
    values.iter().for_each(|&v| acc.add(v));
    let mean = acc.value() / n;
    let mut sq = window::CompensatedSum::default();
    values.iter().for_each(|&v| sq.add((v - mean) * (v - mean)));
    let std = (sq.value() / n).sqrt();
    if !(std > 1e-12 * mean.abs().max(1.0)) {
        return Err(ArcError::ZeroVariance);
    }
    Ok((mean, std))
}

/// Arc of window means of the gold labels.
pub fn gold_arc(stream: &LabeledStream, bin: BinSpec) -> Result<EmotionArc, ArcError> {
    let golds = stream.golds()?;
    label_arc(&golds, bin)
}

/// Arc of window means of per-instance values (gold or predicted labels).
pub fn label_arc(labels: &[f64], bin: BinSpec) -> Result<EmotionArc, ArcError> {
    bin.check(labels.len())?;
    let weights = vec![1u64; labels.len()];
    Ok(EmotionArc::from_values(windowed_ratio(labels, &weights, bin), bin))
}

/// Arc of window means over optionally missing per-instance values; missing
/// instances are left out of both numerator and denominator.
pub fn sparse_arc(values: &[Option<f64>], bin: BinSpec) -> Result<EmotionArc, ArcError> {
    bin.check(values.len())?;
    let nums: Vec<f64> = values.iter().map(|v| v.unwrap_or(0.0)).collect();
    let weights: Vec<u64> = values.iter().map(|v| v.is_some() as u64).collect();
    finish(EmotionArc::from_values(windowed_ratio(&nums, &weights, bin), bin))
}

/// Arc from already-scored instances.
pub fn arc_from_scores(
    scored: &[ScoredInstance],
    policy: OovPolicy,
    pooling: Pooling,
    bin: BinSpec,
) -> Result<EmotionArc, ArcError> {
    match pooling {
        Pooling::InstanceMean => {
            let values: Vec<Option<f64>> = scored.iter().map(|s| s.score).collect();
            sparse_arc(&values, bin)
        }
        Pooling::WordPooled => {
            bin.check(scored.len())?;
            let nums: Vec<f64> = scored.iter().map(|s| s.score_sum).collect();
            let weights: Vec<u64> = scored.iter().map(|s| s.denominator(policy) as u64).collect();
            finish(EmotionArc::from_values(windowed_ratio(&nums, &weights, bin), bin))
        }
    }
}

/// Scores every instance of the stream against the chain and bins the scores.
pub fn predicted_arc(
    stream: &LabeledStream,
    chain: &FallbackChain,
    policy: OovPolicy,
    pooling: Pooling,
    bin: BinSpec,
) -> Result<EmotionArc, ArcError> {
    bin.check(stream.len())?;
    let scored = score_texts(&stream.texts(), chain, policy, PreprocessOptions::default());
    arc_from_scores(&scored, policy, pooling, bin)
}

fn finish(arc: EmotionArc) -> Result<EmotionArc, ArcError> {
    if arc.points.iter().all(|p| p.value.is_none()) {
        return Err(ArcError::AllMissing);
    }
    Ok(arc)
}
