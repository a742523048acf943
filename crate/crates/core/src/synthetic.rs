//! Seeded synthetic corpora with matching lexicons.
//!
//! Used for property tests, the acceptance suite and CLI demos when no real
//! labeled data is available. Each instance draws a gold label uniformly
//! from a label set and emits a bag of tokens: emotion words whose lexicon
//! score is a noisy reading of the gold label, and filler words that no
//! lexicon knows. A share of the emotion words can be drawn from a second
//! vocabulary that only a secondary lexicon covers, which mimics text that
//! mixes two languages.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::arcs::LabeledStream;
use crate::lexicon::{Lexicon, LexiconKind, ScoreRange};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusSpec {
    pub n_instances: usize,
    pub labels: Vec<f64>,
    /// Inclusive range of tokens per instance.
    pub tokens: (usize, usize),
    /// Words per lexicon vocabulary.
    pub vocab_size: usize,
    /// Probability that a token is a primary-vocabulary emotion word.
    pub primary_rate: f64,
    /// Probability that a token is a secondary-vocabulary emotion word.
    pub secondary_rate: f64,
    /// Standard deviation of the per-token score noise, in lexicon units.
    pub noise: f64,
    pub seed: u64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec {
            n_instances: 3000,
            labels: (-3..=3).map(f64::from).collect(),
            tokens: (8, 18),
            vocab_size: 2000,
            primary_rate: 0.3,
            secondary_rate: 0.0,
            noise: 0.8,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    /// Instances in generation order (not sorted by gold).
    pub stream: LabeledStream,
    /// Lexicon over the primary vocabulary, scores in `[-1, 1]`.
    pub primary: Lexicon,
    /// Lexicon over the secondary vocabulary, same emotion and range.
    pub secondary: Lexicon,
}

fn vocabulary(prefix: &str, size: usize) -> Vec<(String, f64)> {
    let size = size.max(2);
    (0..size)
        .map(|i| (format!("{prefix}{i}"), -1.0 + 2.0 * i as f64 / (size - 1) as f64))
        .collect()
}

fn lexicon(name: &str, vocab: &[(String, f64)]) -> Lexicon {
    Lexicon::from_entries(
        name,
        "valence",
        LexiconKind::Continuous,
        ScoreRange { lo: -1.0, hi: 1.0 },
        None,
        vocab.iter().map(|(t, s)| (t.as_str(), *s)),
    )
    .expect("generated vocabulary is valid")
}

/// Generates a corpus. Panics on a spec whose rates exceed 1 or whose label
/// set is empty.
pub fn generate(spec: &CorpusSpec) -> SyntheticCorpus {
    assert!(!spec.labels.is_empty(), "label set must not be empty");
    assert!(spec.primary_rate + spec.secondary_rate <= 1.0, "token rates exceed 1");
    assert!(spec.tokens.0 <= spec.tokens.1, "empty token range");
    let primary = vocabulary("pw", spec.vocab_size);
    let secondary = vocabulary("sw", spec.vocab_size);
    let lo = spec.labels.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = spec.labels.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let noise = Normal::new(0.0, spec.noise.max(0.0)).expect("finite noise");
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let pick = |vocab: &[(String, f64)], score: f64| -> String {
        let i = ((score.clamp(-1.0, 1.0) + 1.0) / 2.0 * (vocab.len() - 1) as f64).round() as usize;
        vocab[i].0.clone()
    };
    let mut pairs = Vec::with_capacity(spec.n_instances);
    for _ in 0..spec.n_instances {
        let gold = spec.labels[rng.random_range(0..spec.labels.len())];
        let centre = if hi > lo { 2.0 * (gold - lo) / (hi - lo) - 1.0 } else { 0.0 };
        let n_tokens = rng.random_range(spec.tokens.0..=spec.tokens.1);
        let mut words = Vec::with_capacity(n_tokens);
        for _ in 0..n_tokens {
            let u: f64 = rng.random();
            let score = centre + noise.sample(&mut rng);
            if u < spec.primary_rate {
                words.push(pick(&primary, score));
            } else if u < spec.primary_rate + spec.secondary_rate {
                words.push(pick(&secondary, score));
            } else {
                words.push(format!("fw{}", rng.random_range(0..500)));
            }
        }
        pairs.push((words.join(" "), Some(gold)));
    }
    SyntheticCorpus {
        stream: LabeledStream::from_pairs(pairs),
        primary: lexicon("synthetic-primary", &primary),
        secondary: lexicon("synthetic-secondary", &secondary),
    }
}

/// Gold labels drawn uniformly from `labels`, sorted ascending.
pub fn sorted_labels(n: usize, labels: &[f64], seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g: Vec<f64> = (0..n).map(|_| labels[rng.random_range(0..labels.len())]).collect();
    g.sort_by(f64::total_cmp);
    g
}
