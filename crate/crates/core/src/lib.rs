//! Emotion arcs from ordered text streams.
//!
//! The crate covers the whole pipeline: loading emotion lexicons
//! ([`lexicon`]), preprocessing and scoring text ([`text`]), binning scores
//! and gold labels into arcs ([`arcs`]), simulating classifiers and dynamic
//! streams ([`simulate`]), and rank-correlation evaluation with a resumable
//! parameter sweep ([`eval`]).

pub mod arcs;
pub mod eval;
pub mod lexicon;
pub mod manifest;
pub mod plot;
pub mod simulate;
pub mod synthetic;
pub mod text;

pub use arcs::{gold_arc, predicted_arc, BinMode, BinSpec, EmotionArc, LabeledStream, Pooling};
pub use eval::{evaluate, spearman, EvalReport, RunParams};
pub use lexicon::{FallbackChain, Lexicon, LexiconKind, ScoreRange, ThresholdFilter};
pub use text::OovPolicy;
