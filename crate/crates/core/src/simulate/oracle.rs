//! Simulated instance-level classifier with a target accuracy.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::SimulateError;
use crate::arcs::LabeledStream;

const LABEL_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    accuracy: f64,
    label_set: Vec<f64>,
    seed: u64,
}

impl OracleConfig {
    /// `label_set` is sorted and deduplicated; it needs at least two labels.
    pub fn new(accuracy: f64, mut label_set: Vec<f64>, seed: u64) -> Result<Self, SimulateError> {
        if !(0.0..=1.0).contains(&accuracy) {
            return Err(SimulateError::InvalidAccuracy(accuracy));
        }
        if label_set.iter().any(|l| !l.is_finite()) {
            return Err(SimulateError::InvalidLabels("labels must be finite".into()));
        }
        label_set.sort_by(f64::total_cmp);
        label_set.dedup();
        if label_set.len() < 2 {
            return Err(SimulateError::InvalidLabels(format!(
                "need at least 2 distinct labels, got {}",
                label_set.len()
            )));
        }
        Ok(OracleConfig {
            accuracy,
            label_set,
            seed,
        })
    }

    pub fn accuracy(&self) -> f64 {
        self.accuracy
    }

    pub fn label_set(&self) -> &[f64] {
        &self.label_set
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn random_baseline(&self) -> f64 {
        1.0 / self.label_set.len() as f64
    }
}

/// Instance-level accuracy of uniform random guessing.
pub fn random_baseline(label_set: &[f64]) -> Result<f64, SimulateError> {
    let mut labels = label_set.to_vec();
    labels.sort_by(f64::total_cmp);
    labels.dedup();
    if labels.len() < 2 {
        return Err(SimulateError::InvalidLabels(format!(
            "need at least 2 distinct labels, got {}",
            labels.len()
        )));
    }
    Ok(1.0 / labels.len() as f64)
}

/// Parses a label set: an integer range `lo..hi` (inclusive) or a comma list.
pub fn parse_label_set(s: &str) -> Result<Vec<f64>, SimulateError> {
    let bad = || SimulateError::InvalidLabels(format!("cannot parse label set {s:?}"));
    if let Some((lo, hi)) = s.split_once("..") {
        let lo: i64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: i64 = hi.trim().parse().map_err(|_| bad())?;
        if lo >= hi {
            return Err(bad());
        }
        return Ok((lo..=hi).map(|v| v as f64).collect());
    }
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| bad()))
        .collect()
}

/// Predicts a label for each gold label: the gold label with probability
/// `accuracy`, otherwise a uniformly chosen different label.
///
/// Randomness for instance `i` comes from ChaCha8 stream `i` under the
/// configured seed, so the output does not depend on scheduling.
pub fn oracle_predict(golds: &[f64], cfg: &OracleConfig) -> Result<Vec<f64>, SimulateError> {
    let labels = &cfg.label_set;
    let slots: Vec<usize> = golds
        .iter()
        .enumerate()
        .map(|(i, g)| {
            labels
                .iter()
                .position(|l| (l - g).abs() < LABEL_EPS)
                .ok_or(SimulateError::LabelOutsideSet { index: i, label: *g })
        })
        .collect::<Result<_, _>>()?;
    let base = ChaCha8Rng::seed_from_u64(cfg.seed);
    Ok(slots
        .par_iter()
        .enumerate()
        .map(|(i, &slot)| {
            let mut rng = base.clone();
            rng.set_stream(i as u64);
            rng.set_word_pos(0);
            if rng.random::<f64>() < cfg.accuracy {
                labels[slot]
            } else {
                let mut other = rng.random_range(0..labels.len() - 1);
                if other >= slot {
                    other += 1;
                }
                labels[other]
            }
        })
        .collect())
}

/// [`oracle_predict`] over the gold labels of a stream.
pub fn oracle_labels(stream: &LabeledStream, cfg: &OracleConfig) -> Result<Vec<f64>, SimulateError> {
    let golds = stream.golds()?;
    oracle_predict(&golds, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seven() -> Vec<f64> {
        (-3..=3).map(|v| v as f64).collect()
    }

    fn golds(n: usize) -> Vec<f64> {
        (0..n).map(|i| ((i * 7919) % 7) as f64 - 3.0).collect()
    }

    #[test]
    fn perfect_and_zero_accuracy() {
        let g = golds(500);
        let p = oracle_predict(&g, &OracleConfig::new(1.0, seven(), 3).unwrap()).unwrap();
        assert_eq!(p, g);
        let p = oracle_predict(&g, &OracleConfig::new(0.0, seven(), 3).unwrap()).unwrap();
        assert!(p.iter().zip(&g).all(|(a, b)| a != b));
    }

    #[test]
    fn empirical_accuracy_converges() {
        let g = golds(100_000);
        let p = oracle_predict(&g, &OracleConfig::new(0.6, seven(), 11).unwrap()).unwrap();
        let acc = p.iter().zip(&g).filter(|(a, b)| a == b).count() as f64 / g.len() as f64;
        assert!((acc - 0.6).abs() < 0.01, "accuracy {acc}");
    }

    #[test]
    fn wrong_labels_are_uniform() {
        let g = vec![0.0; 60_000];
        let p = oracle_predict(&g, &OracleConfig::new(0.0, seven(), 5).unwrap()).unwrap();
        for l in [-3.0, -2.0, -1.0, 1.0, 2.0, 3.0] {
            let f = p.iter().filter(|&&x| x == l).count() as f64 / g.len() as f64;
            assert!((f - 1.0 / 6.0).abs() < 0.01, "label {l}: {f}");
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let g = golds(2000);
        let cfg = OracleConfig::new(0.4, seven(), 42).unwrap();
        assert_eq!(oracle_predict(&g, &cfg).unwrap(), oracle_predict(&g, &cfg).unwrap());
        let other = OracleConfig::new(0.4, seven(), 43).unwrap();
        assert_ne!(oracle_predict(&g, &cfg).unwrap(), oracle_predict(&g, &other).unwrap());
        // prefix stability: instance i depends only on (seed, i)
        let short = oracle_predict(&g[..100], &cfg).unwrap();
        assert_eq!(short, oracle_predict(&g, &cfg).unwrap()[..100]);
    }

    #[test]
    fn rejects_bad_config() {
        assert!(OracleConfig::new(1.5, seven(), 0).is_err());
        assert!(OracleConfig::new(0.5, vec![1.0], 0).is_err());
        assert!(OracleConfig::new(0.5, vec![1.0, 1.0], 0).is_err());
        let cfg = OracleConfig::new(0.5, vec![0.0, 1.0], 0).unwrap();
        assert!(matches!(
            oracle_predict(&[0.0, 2.0], &cfg),
            Err(SimulateError::LabelOutsideSet { index: 1, .. })
        ));
    }

    #[test]
    fn baselines() {
        assert!((random_baseline(&seven()).unwrap() - 0.142857142857).abs() < 1e-9);
        assert_eq!(random_baseline(&[0.0, 1.0]).unwrap(), 0.5);
        assert_eq!(random_baseline(&[0.0, 1.0, 2.0, 3.0]).unwrap(), 0.25);
        assert!(random_baseline(&[1.0]).is_err());
    }

    #[test]
    fn label_set_parsing() {
        assert_eq!(parse_label_set("-3..3").unwrap(), seven());
        assert_eq!(parse_label_set("0, 1,2").unwrap(), vec![0.0, 1.0, 2.0]);
        assert!(parse_label_set("3..-3").is_err());
        assert!(parse_label_set("a,b").is_err());
    }
}
