//! Evaluation of predicted arcs against gold arcs.

mod bootstrap;
mod spearman;
pub mod sweep;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bootstrap::{bootstrap_difference, BootstrapResult};
pub use spearman::{align, average_ranks, pearson, spearman, spearman_values, Aligned};

use crate::arcs::{BinMode, EmotionArc, Pooling};
use crate::lexicon::LexiconKind;
use crate::text::OovPolicy;

/// Tie handling recorded in every report.
pub const TIE_METHOD: &str = "average-rank";

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("rank correlation undefined: an arc is constant over the shared points")]
    ConstantInput,
    #[error("need at least 2 shared points, found {0}")]
    TooFewPoints(usize),
    #[error("value vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("arcs were built with different bins ({0} vs {1})")]
    BinMismatch(String, String),
    #[error("invalid bootstrap setup: {0}")]
    Bootstrap(String),
}

/// Everything that identifies how a predicted arc was produced.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunParams {
    pub dataset: String,
    pub emotion: String,
    /// `lexicon`, `oracle` or `external`.
    pub method: String,
    pub lexicon: Option<String>,
    pub kind: Option<LexiconKind>,
    pub oov: Option<OovPolicy>,
    pub pooling: Option<Pooling>,
    pub threshold: Option<f64>,
    pub accuracy: Option<f64>,
    pub bin_size: usize,
    pub bin_mode: Option<BinMode>,
    pub fallback: bool,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rho: f64,
    pub n_points: usize,
    /// Positions present in both arcs where either value was missing.
    pub n_excluded: usize,
    pub tie_method: String,
    pub params: RunParams,
}

/// Spearman's rho between a predicted and a gold arc, with diagnostics.
pub fn evaluate(predicted: &EmotionArc, gold: &EmotionArc, params: RunParams) -> Result<EvalReport, EvalError> {
    if predicted.bin() != gold.bin() {
        return Err(EvalError::BinMismatch(
            format!("{:?}", predicted.bin()),
            format!("{:?}", gold.bin()),
        ));
    }
    let al = align(predicted, gold);
    let rho = spearman_values(&al.a, &al.b)?;
    Ok(EvalReport {
        rho,
        n_points: al.a.len(),
        n_excluded: al.excluded,
        tie_method: TIE_METHOD.to_string(),
        params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arcs::{label_arc, BinSpec};

    #[test]
    fn perfect_prediction() {
        let golds: Vec<f64> = (0..1000).map(|i| ((i * 13) % 7) as f64 - 3.0).collect();
        let bin = BinSpec::rolling(100).unwrap();
        let g = label_arc(&golds, bin).unwrap();
        let r = evaluate(&g.clone(), &g, RunParams::default()).unwrap();
        assert_eq!(r.rho, 1.0);
        assert_eq!(r.n_points, 901);
        assert_eq!(r.n_excluded, 0);
    }

    #[test]
    fn missing_points_are_excluded() {
        let bin = BinSpec::rolling(1).unwrap();
        let gold: Vec<Option<f64>> = (0..20).map(|i| Some(i as f64)).collect();
        let mut pred = gold.clone();
        for i in [1, 4, 9, 12, 17] {
            pred[i] = None;
        }
        let r = evaluate(
            &EmotionArc::from_values(pred, bin),
            &EmotionArc::from_values(gold, bin),
            RunParams::default(),
        )
        .unwrap();
        assert_eq!(r.n_excluded, 5);
        assert_eq!(r.n_points, 15);
        assert_eq!(r.rho, 1.0);
    }

    #[test]
    fn bin_mismatch() {
        let a = label_arc(&[1.0, 2.0, 3.0], BinSpec::rolling(1).unwrap()).unwrap();
        let b = label_arc(&[1.0, 2.0, 3.0], BinSpec::rolling(2).unwrap()).unwrap();
        assert!(matches!(
            evaluate(&a, &b, RunParams::default()),
            Err(EvalError::BinMismatch(..))
        ));
    }

    #[test]
    fn report_round_trips() {
        let report = EvalReport {
            rho: 0.123456789012345,
            n_points: 2701,
            n_excluded: 3,
            tie_method: TIE_METHOD.into(),
            params: RunParams {
                dataset: "voc".into(),
                emotion: "valence".into(),
                method: "lexicon".into(),
                lexicon: Some("nrc-vad".into()),
                kind: Some(LexiconKind::Continuous),
                oov: Some(OovPolicy::Zero),
                pooling: Some(Pooling::WordPooled),
                threshold: Some(0.66),
                accuracy: None,
                bin_size: 300,
                bin_mode: Some(BinMode::Rolling),
                fallback: true,
                seed: Some(u64::MAX),
            },
        };
        let json = serde_json::to_string(&report).unwrap();
        let back: EvalReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
    }
}
