//! Oracle classifiers and dynamic stream synthesis.

mod dynamic;
mod oracle;

use thiserror::Error;

pub use dynamic::{count_extrema, count_swings, synthesize_dynamic, wave_trajectory, DynamicStream, WaveSpec};
pub use oracle::{oracle_labels, oracle_predict, parse_label_set, random_baseline, OracleConfig};

use crate::arcs::ArcError;

#[derive(Debug, Error)]
pub enum SimulateError {
    #[error("accuracy {0} outside [0, 1]")]
    InvalidAccuracy(f64),
    #[error("invalid label set: {0}")]
    InvalidLabels(String),
    #[error("instance {index}: gold label {label} is not in the label set")]
    LabelOutsideSet { index: usize, label: f64 },
    #[error("invalid wave: {0}")]
    InvalidWave(String),
    #[error("gold labels must take at least 2 distinct values")]
    TooFewDistinctLabels,
    #[error(transparent)]
    Arc(#[from] ArcError),
}
