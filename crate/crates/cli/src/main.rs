//! `emoarc`: emotion arcs from lexicons, gold labels and simulated systems.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use emoarc::arcs::BinMode;
use emoarc::lexicon::{LexiconKind, ScoreRange};
use emoarc::{OovPolicy, Pooling};

mod commands;
mod output;

#[derive(Parser, Debug)]
#[command(name = "emoarc", version, about = "Emotion arcs from text streams")]
struct Cli {
    /// Seed for every random draw (oracle, dynamic, bootstrap).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Log filter, e.g. `info` or `emoarc=debug`.
    #[arg(long, global = true, default_value = "warn")]
    log_level: String,

    /// Directory that relative output paths are resolved against.
    #[arg(long, global = true, env = "EMOARC_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,

    /// Write tables as line-delimited JSON instead of CSV.
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Inspect or transform a lexicon file.
    #[command(subcommand)]
    Lexicon(LexiconCommand),
    /// Score every instance of a dataset against a lexicon chain.
    Score(ScoreArgs),
    /// Predicted arc of a dataset from a lexicon chain.
    Arc(ArcArgs),
    /// Gold arc from a dataset's labels.
    Gold(GoldArgs),
    /// Simulate a system of given accuracy on gold labels.
    Oracle(OracleArgs),
    /// Resample a dataset so its gold arc follows a wave.
    Dynamic(DynamicArgs),
    /// Rank-correlate a predicted arc with a gold arc.
    Eval(EvalArgs),
    /// Run a parameter sweep described by a TOML file.
    Sweep(SweepArgs),
    /// Draw arcs as an SVG line chart.
    Plot(PlotArgs),
}

#[derive(Subcommand, Debug)]
enum LexiconCommand {
    /// Check a lexicon and print entry count, histogram and duplicates.
    Validate(ValidateArgs),
    /// Map continuous scores onto labels by cutoffs.
    Binarize(BinarizeArgs),
    /// Keep only entries with |score| above a threshold.
    Threshold(ThresholdArgs),
}

/// One lexicon file and how to read it.
#[derive(Args, Debug, Serialize)]
struct LexiconFile {
    path: PathBuf,
    #[arg(long, default_value = "cont")]
    kind: LexiconKind,
    #[arg(long, default_value = "-1..1", allow_hyphen_values = true)]
    range: ScoreRange,
    #[arg(long, default_value = "valence")]
    emotion: String,
    /// Label set of a categorical lexicon; defaults to the integers in range.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    labels: Option<Vec<f64>>,
    /// Zero-based column holding the score.
    #[arg(long, default_value_t = 1)]
    score_column: usize,
    /// Skip a header line.
    #[arg(long)]
    header: bool,
}

#[derive(Args, Debug, Serialize)]
struct ValidateArgs {
    #[command(flatten)]
    lexicon: LexiconFile,
    /// Histogram buckets for continuous lexicons.
    #[arg(long, default_value_t = 10)]
    buckets: usize,
}

#[derive(Args, Debug, Serialize)]
struct BinarizeArgs {
    #[command(flatten)]
    lexicon: LexiconFile,
    /// Strictly increasing cutoffs; a score equal to a cutoff goes up.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    cutoffs: Vec<f64>,
    /// One more label than cutoffs.
    #[arg(long = "to", value_delimiter = ',', allow_hyphen_values = true, required = true)]
    to_labels: Vec<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct ThresholdArgs {
    #[command(flatten)]
    lexicon: LexiconFile,
    #[arg(long)]
    threshold: f64,
    #[arg(long)]
    out: PathBuf,
}

/// A fallback chain of lexicons sharing kind, emotion and range.
#[derive(Args, Debug, Serialize)]
struct ChainArgs {
    /// Lexicon TSV files, consulted in the order given.
    #[arg(long = "lexicon", required = true, num_args = 1..)]
    lexicons: Vec<PathBuf>,
    #[arg(long, default_value = "cont")]
    kind: LexiconKind,
    #[arg(long, default_value = "-1..1", allow_hyphen_values = true)]
    range: ScoreRange,
    #[arg(long, default_value = "valence")]
    emotion: String,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    labels: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1)]
    score_column: usize,
    /// Lexicon files start with a header line.
    #[arg(long)]
    lexicon_header: bool,
    /// Drop lexicon entries with |score| <= threshold.
    #[arg(long, default_value_t = 0.0)]
    threshold: f64,
}

#[derive(Args, Debug, Serialize, Clone)]
struct DatasetArgs {
    /// Dataset file (CSV, or TSV for .tsv/.txt).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Text column: header name or zero-based index.
    #[arg(long, default_value = "text")]
    text_column: String,
    /// Label column: header name or zero-based index.
    #[arg(long)]
    label_column: Option<String>,
    #[arg(long)]
    delimiter: Option<char>,
    #[arg(long)]
    no_header: bool,
    /// Sort instances by gold label (stable) before binning.
    #[arg(long)]
    order_by_gold: bool,
}

#[derive(Args, Debug, Serialize, Clone, Copy)]
struct BinArgs {
    /// Instances per arc point.
    #[arg(long)]
    bin: usize,
    #[arg(long, default_value = "rolling")]
    mode: BinMode,
}

#[derive(Args, Debug, Serialize)]
struct ScoreArgs {
    #[command(flatten)]
    chain: ChainArgs,
    #[command(flatten)]
    data: DatasetArgs,
    #[arg(long, default_value = "skip")]
    oov: OovPolicy,
    /// Defaults to scores.csv (scores.jsonl with --json).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct ArcArgs {
    #[command(flatten)]
    chain: ChainArgs,
    #[command(flatten)]
    data: DatasetArgs,
    #[command(flatten)]
    bin: BinArgs,
    #[arg(long, default_value = "skip")]
    oov: OovPolicy,
    #[arg(long, default_value = "instance")]
    pooling: Pooling,
    /// Shift and scale to zero mean and unit variance.
    #[arg(long)]
    standardize: bool,
    /// Defaults to arc.csv (arc.jsonl with --json).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct GoldArgs {
    #[command(flatten)]
    data: DatasetArgs,
    #[command(flatten)]
    bin: BinArgs,
    #[arg(long)]
    standardize: bool,
    /// Defaults to gold.csv (gold.jsonl with --json).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct OracleArgs {
    /// Probability of emitting the gold label.
    #[arg(long)]
    accuracy: f64,
    /// Label set: `lo..hi` integers or a comma list.
    #[arg(long, default_value = "-3..3", allow_hyphen_values = true)]
    labels: String,
    /// Without --input, a stream of this many sorted uniform labels is used.
    #[arg(long, default_value_t = 3000)]
    n: usize,
    #[command(flatten)]
    data: DatasetArgs,
    #[arg(long, default_value = "oracle.csv")]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct DynamicArgs {
    #[arg(long, default_value_t = 200)]
    crests: usize,
    #[arg(long, default_value_t = 200)]
    troughs: usize,
    /// Extremum heights in standard deviations, `lo:hi`.
    #[arg(long, default_value = "0.5:3.0")]
    amp: String,
    /// Ramp lengths in instances, `lo:hi`.
    #[arg(long, default_value = "20:400")]
    width: String,
    /// Nearest instances each step samples from.
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Rolling bin for the reported arc extrema.
    #[arg(long, default_value_t = 100)]
    arc_bin: usize,
    /// Without --input, a synthetic corpus is generated.
    #[command(flatten)]
    data: DatasetArgs,
    #[arg(long, default_value = "dynamic.csv")]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct EvalArgs {
    /// Predicted arc CSV (`position,value`).
    #[arg(long)]
    pred: PathBuf,
    /// Gold arc CSV.
    #[arg(long)]
    gold: PathBuf,
    /// Second predicted arc to compare against with a paired bootstrap.
    #[arg(long)]
    baseline: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    resamples: usize,
    /// Bin the arcs were built with, recorded in the report.
    #[arg(long, default_value_t = 1)]
    bin: usize,
    #[arg(long, default_value = "rolling")]
    mode: BinMode,
    /// Also write the report as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    /// Results directory.
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Recompute cells whose cached result is an error.
    #[arg(long)]
    retry_errors: bool,
}

#[derive(Args, Debug, Serialize)]
struct PlotArgs {
    /// Arc CSV files, optionally `label=path`.
    #[arg(required = true)]
    arcs: Vec<String>,
    #[arg(long, default_value = "plot.svg")]
    out: PathBuf,
    #[arg(long)]
    title: Option<String>,
    #[arg(long, default_value_t = 900)]
    width: u32,
    #[arg(long, default_value_t = 400)]
    height: u32,
    #[arg(long, default_value = "position")]
    x_label: String,
    #[arg(long, default_value = "score")]
    y_label: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .parse_filters(&cli.log_level)
        .format_timestamp(None)
        .init();
    match commands::dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
