//! Preprocessing, tokenization and lexicon scoring of text instances.

use std::fmt;
use std::str::FromStr;
use std::sync::LazyLock;

use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::lexicon::FallbackChain;

static URL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)(?:https?://|www\.)\S*").unwrap());
static EDGE_PUNCT: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^[\p{P}\p{S}]+|[\p{P}\p{S}]+$").unwrap());

/// What to do with tokens that no lexicon in the chain knows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OovPolicy {
    /// Disregard OOV tokens entirely.
    Skip,
    /// OOV tokens score 0 but still count towards the denominator.
    Zero,
}

impl fmt::Display for OovPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OovPolicy::Skip => "skip",
            OovPolicy::Zero => "zero",
        })
    }
}

impl FromStr for OovPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "skip" | "na" => Ok(OovPolicy::Skip),
            "zero" | "0" => Ok(OovPolicy::Zero),
            other => Err(format!("unknown OOV policy {other:?} (expected skip or zero)")),
        }
    }
}

/// Toggles for the individual preprocessing rules. All are on by default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocessOptions {
    pub lowercase: bool,
    pub strip_urls: bool,
    pub strip_numbers: bool,
    pub strip_markers: bool,
}

impl Default for PreprocessOptions {
    fn default() -> Self {
        PreprocessOptions {
            lowercase: true,
            strip_urls: true,
            strip_numbers: true,
            strip_markers: true,
        }
    }
}

/// Normalizes a raw instance with the default rules.
///
/// ```
/// assert_eq!(emoarc::text::preprocess("Great DAY http://x.co 100"), "great day");
/// ```
pub fn preprocess(raw: &str) -> String {
    preprocess_with(raw, PreprocessOptions::default())
}

pub fn preprocess_with(raw: &str, opts: PreprocessOptions) -> String {
    let lowered;
    let mut text: &str = raw;
    if opts.lowercase {
        lowered = raw.to_lowercase();
        text = &lowered;
    }
    let without_urls;
    if opts.strip_urls {
        without_urls = URL.replace_all(text, " ");
        text = &without_urls;
    }
    let mut out = String::with_capacity(text.len());
    for word in text.split_whitespace() {
        let word = if opts.strip_markers {
            word.trim_start_matches(['@', '#'])
        } else {
            word
        };
        if word.is_empty() || (opts.strip_numbers && is_numeric_token(word)) {
            continue;
        }
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

/// A token made only of digits and the punctuation found inside numbers
/// (`100`, `3.14`, `1,000`, `12:30`, `-5`, `50%`).
fn is_numeric_token(word: &str) -> bool {
    let mut digits = false;
    for c in word.chars() {
        if c.is_numeric() {
            digits = true;
        } else if !matches!(c, '.' | ',' | ':' | '/' | '-' | '+' | '%' | '$' | '€' | '£') {
            return false;
        }
    }
    digits
}

/// Splits on whitespace and strips punctuation/symbols from token edges.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|t| EDGE_PUNCT.replace_all(t, ""))
        .filter(|t| !t.is_empty())
        .map(|t| t.into_owned())
        .collect()
}

/// Preprocess + tokenize.
pub fn analyze(raw: &str, opts: PreprocessOptions) -> Vec<String> {
    tokenize(&preprocess_with(raw, opts))
}

/// Lexicon score of one instance together with the counts behind it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredInstance {
    pub token_count: usize,
    pub in_vocab_count: usize,
    /// Sum of the scores of in-vocabulary tokens.
    pub score_sum: f64,
    /// Absent iff the policy leaves nothing to average.
    pub score: Option<f64>,
}

impl ScoredInstance {
    /// Denominator the policy divides `score_sum` by.
    pub fn denominator(&self, policy: OovPolicy) -> usize {
        match policy {
            OovPolicy::Skip => self.in_vocab_count,
            OovPolicy::Zero => self.token_count,
        }
    }
}

/// Scores a tokenized instance against a fallback chain.
pub fn score_instance<S: AsRef<str>>(
    tokens: &[S],
    chain: &FallbackChain,
    policy: OovPolicy,
) -> ScoredInstance {
    let mut in_vocab_count = 0;
    let mut score_sum = 0.0;
    for token in tokens {
        if let Some(hit) = chain.lookup(token.as_ref()) {
            in_vocab_count += 1;
            score_sum += hit.score;
        }
    }
    let mut scored = ScoredInstance {
        token_count: tokens.len(),
        in_vocab_count,
        score_sum,
        score: None,
    };
    let denom = scored.denominator(policy);
    if denom > 0 {
        scored.score = Some(score_sum / denom as f64);
    }
    scored
}

/// Preprocesses, tokenizes and scores every text in parallel; output order
/// follows input order.
pub fn score_texts<S: AsRef<str> + Sync>(
    texts: &[S],
    chain: &FallbackChain,
    policy: OovPolicy,
    opts: PreprocessOptions,
) -> Vec<ScoredInstance> {
    texts
        .par_iter()
        .map(|t| score_instance(&analyze(t.as_ref(), opts), chain, policy))
        .collect()
}

/// Writes `index,score,token_count,in_vocab_count` rows; a missing score is
/// an empty field.
pub fn write_scores_csv<W: std::io::Write>(
    mut out: W,
    indices: &[usize],
    scored: &[ScoredInstance],
) -> std::io::Result<()> {
    writeln!(out, "index,score,token_count,in_vocab_count")?;
    for (i, s) in indices.iter().zip(scored) {
        let score = s.score.map(|v| v.to_string()).unwrap_or_default();
        writeln!(out, "{i},{score},{},{}", s.token_count, s.in_vocab_count)?;
    }
    out.flush()
}

/// Line-delimited JSON version of [`write_scores_csv`].
pub fn write_scores_jsonl<W: std::io::Write>(
    mut out: W,
    indices: &[usize],
    scored: &[ScoredInstance],
) -> std::io::Result<()> {
    for (i, s) in indices.iter().zip(scored) {
        let row = serde_json::json!({
            "index": i,
            "score": s.score,
            "token_count": s.token_count,
            "in_vocab_count": s.in_vocab_count,
        });
        writeln!(out, "{row}")?;
    }
    out.flush()
}
