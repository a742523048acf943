use std::path::{Path, PathBuf};

use anyhow::{bail, Context as _, Result};
use clap::error::ErrorKind;
use clap::CommandFactory;
use serde_json::json;

use emoarc::arcs::{
    arc_from_scores, gold_arc, load_dataset, read_arc, write_arc_csv, write_arc_jsonl, write_dataset, BinSpec,
    Column, DatasetSchema, EmotionArc, LabeledStream,
};
use emoarc::eval::sweep::{run_sweep, SweepConfig, SweepOptions};
use emoarc::eval::{bootstrap_difference, evaluate, RunParams};
use emoarc::lexicon::{
    load_lexicon, load_lexicon_with_report, write_lexicon, FallbackChain, LoadOptions, ThresholdFilter,
};
use emoarc::manifest::{manifest_path_for, Manifest};
use emoarc::plot::{render_svg, PlotOptions, Series};
use emoarc::simulate::{oracle_labels, parse_label_set, synthesize_dynamic, OracleConfig, WaveSpec};
use emoarc::synthetic::{generate, sorted_labels, CorpusSpec};
use emoarc::text::{score_texts, write_scores_csv, write_scores_jsonl, PreprocessOptions};

use crate::output::Context;
use crate::{
    ArcArgs, BinArgs, ChainArgs, Cli, Command, DatasetArgs, DynamicArgs, EvalArgs, GoldArgs, LexiconCommand,
    LexiconFile, OracleArgs, PlotArgs, ScoreArgs, SweepArgs,
};

pub fn dispatch(cli: Cli) -> Result<()> {
    let ctx = Context {
        out_dir: cli.out_dir,
        seed: cli.seed,
        json: cli.json,
        command: std::env::args().skip(1).collect(),
    };
    match cli.command {
        Command::Lexicon(LexiconCommand::Validate(a)) => validate(&ctx, &a.lexicon, a.buckets),
        Command::Lexicon(LexiconCommand::Binarize(a)) => {
            let lex = load_file(&a.lexicon)?;
            let out = lex.binarize(&a.cutoffs, &a.to_labels)?;
            let path = ctx.output_path(&a.out);
            ctx.write_output(&path, ctx.manifest(false, &a), &[&a.lexicon.path], |w| {
                write_lexicon(w, &out)
            })?;
            report(&ctx, json!({"entries": out.len(), "output": path}), &format!("{} entries", out.len()));
            Ok(())
        }
        Command::Lexicon(LexiconCommand::Threshold(a)) => {
            let lex = load_file(&a.lexicon)?;
            let out = lex.apply_threshold(ThresholdFilter::new(a.threshold)?);
            let path = ctx.output_path(&a.out);
            ctx.write_output(&path, ctx.manifest(false, &a), &[&a.lexicon.path], |w| {
                write_lexicon(w, &out)
            })?;
            report(
                &ctx,
                json!({"entries": out.len(), "dropped": lex.len() - out.len(), "output": path}),
                &format!("kept {} of {} entries", out.len(), lex.len()),
            );
            Ok(())
        }
        Command::Score(a) => score(&ctx, &a),
        Command::Arc(a) => arc(&ctx, &a),
        Command::Gold(a) => gold(&ctx, &a),
        Command::Oracle(a) => oracle(&ctx, &a),
        Command::Dynamic(a) => dynamic(&ctx, &a),
        Command::Eval(a) => eval(&ctx, &a),
        Command::Sweep(a) => sweep(&ctx, &a),
        Command::Plot(a) => plot(&ctx, &a),
    }
}

/// Prints a JSON line under --json, otherwise the text line.
fn report(ctx: &Context, value: serde_json::Value, text: &str) {
    if ctx.json {
        println!("{value}");
    } else {
        println!("{text}");
    }
}

fn usage_error(msg: &str) -> ! {
    Cli::command().error(ErrorKind::MissingRequiredArgument, msg).exit()
}

fn load_options(f: &LexiconFile) -> LoadOptions {
    let mut opts = LoadOptions::new(f.kind, f.emotion.clone(), f.range);
    opts.labels = f.labels.clone();
    opts.score_column = f.score_column;
    opts.has_header = f.header;
    opts
}

fn load_file(f: &LexiconFile) -> Result<emoarc::Lexicon> {
    Ok(load_lexicon(&f.path, &load_options(f))?)
}

fn validate(ctx: &Context, f: &LexiconFile, buckets: usize) -> Result<()> {
    let (lex, rep) = load_lexicon_with_report(&f.path, &load_options(f))?;
    let hist = lex.histogram(buckets);
    if ctx.json {
        println!(
            "{}",
            json!({
                "lexicon": lex.name(),
                "kind": lex.kind(),
                "entries": lex.len(),
                "checksum": lex.checksum(),
                "lines": rep.lines,
                "comment_lines": rep.comment_lines,
                "multiword_entries": rep.multiword_entries,
                "duplicates": rep.duplicates.iter().map(|(t, l)| json!({"term": t, "line": l})).collect::<Vec<_>>(),
                "histogram": hist,
            })
        );
        return Ok(());
    }
    println!("lexicon    {}", lex.name());
    println!("kind       {}", lex.kind());
    println!("entries    {}", lex.len());
    println!("checksum   {}", lex.checksum());
    if rep.multiword_entries > 0 {
        println!("multi-word {} (never matched by the tokenizer)", rep.multiword_entries);
    }
    println!("histogram");
    for b in &hist {
        if b.lo == b.hi {
            println!("  {:>8}  {}", b.lo, b.count);
        } else {
            println!("  [{:.3}, {:.3})  {}", b.lo, b.hi, b.count);
        }
    }
    if rep.duplicates.is_empty() {
        println!("duplicates none");
    } else {
        println!("duplicates {} (identical scores, kept once)", rep.duplicates.len());
        for (term, line) in &rep.duplicates {
            println!("  {term}\tline {line}");
        }
    }
    Ok(())
}

fn load_chain(c: &ChainArgs) -> Result<FallbackChain> {
    let mut lexicons = Vec::new();
    for path in &c.lexicons {
        let mut opts = LoadOptions::new(c.kind, c.emotion.clone(), c.range);
        opts.labels = c.labels.clone();
        opts.score_column = c.score_column;
        opts.has_header = c.lexicon_header;
        lexicons.push(load_lexicon(path, &opts)?);
    }
    let chain = FallbackChain::new(lexicons)?;
    if c.threshold > 0.0 {
        return Ok(chain.apply_threshold(ThresholdFilter::new(c.threshold)?));
    }
    Ok(chain)
}

/// Loads `--input`; `labels` forces a label column (default `label`).
fn load_data(d: &DatasetArgs, labels: bool) -> Result<(PathBuf, LabeledStream)> {
    let Some(path) = d.input.clone() else {
        usage_error("the argument '--input <INPUT>' is required");
    };
    let label = match (&d.label_column, labels || d.order_by_gold) {
        (Some(c), _) => Some(Column::from(c.as_str())),
        (None, true) => Some(Column::Name("label".into())),
        (None, false) => None,
    };
    let delimiter = match d.delimiter {
        Some(c) if c.is_ascii() => Some(c as u8),
        Some(c) => bail!("delimiter {c:?} is not a single-byte character"),
        None => None,
    };
    let schema = DatasetSchema {
        text_column: Column::from(d.text_column.as_str()),
        label_column: label,
        delimiter,
        has_header: !d.no_header,
    };
    let mut stream = load_dataset(&path, &schema)?;
    if d.order_by_gold {
        stream = stream.order_by_gold()?;
    }
    Ok((path, stream))
}

fn write_arc(ctx: &Context, path: &Path, manifest: Manifest, inputs: &[&Path], arc: &EmotionArc) -> Result<()> {
    if ctx.json {
        ctx.write_output(path, manifest, inputs, |w| write_arc_jsonl(w, arc))
    } else {
        ctx.write_output(path, manifest, inputs, |w| write_arc_csv(w, arc))
    }
}

fn bin_spec(b: BinArgs) -> Result<BinSpec> {
    Ok(BinSpec::new(b.bin, b.mode)?)
}

fn score(ctx: &Context, a: &ScoreArgs) -> Result<()> {
    let chain = load_chain(&a.chain)?;
    let (input, stream) = load_data(&a.data, false)?;
    let scored = score_texts(&stream.texts(), &chain, a.oov, PreprocessOptions::default());
    let indices: Vec<usize> = stream.iter().map(|i| i.index).collect();
    let path = ctx.table_path(a.out.as_deref(), "scores");
    let mut inputs: Vec<&Path> = a.chain.lexicons.iter().map(PathBuf::as_path).collect();
    inputs.push(&input);
    let manifest = ctx.manifest(false, a);
    if ctx.json {
        ctx.write_output(&path, manifest, &inputs, |w| write_scores_jsonl(w, &indices, &scored))?;
    } else {
        ctx.write_output(&path, manifest, &inputs, |w| write_scores_csv(w, &indices, &scored))?;
    }
    let unscored = scored.iter().filter(|s| s.score.is_none()).count();
    log::info!("{} instances, {} without a score", scored.len(), unscored);
    Ok(())
}

fn arc(ctx: &Context, a: &ArcArgs) -> Result<()> {
    let bin = bin_spec(a.bin)?;
    let chain = load_chain(&a.chain)?;
    let (input, stream) = load_data(&a.data, false)?;
    let scored = score_texts(&stream.texts(), &chain, a.oov, PreprocessOptions::default());
    let mut arc = arc_from_scores(&scored, a.oov, a.pooling, bin)?;
    if a.standardize {
        arc = arc.standardize()?;
    }
    let path = ctx.table_path(a.out.as_deref(), "arc");
    let mut inputs: Vec<&Path> = a.chain.lexicons.iter().map(PathBuf::as_path).collect();
    inputs.push(&input);
    write_arc(ctx, &path, ctx.manifest(false, a), &inputs, &arc)
}

fn gold(ctx: &Context, a: &GoldArgs) -> Result<()> {
    let bin = bin_spec(a.bin)?;
    let (input, stream) = load_data(&a.data, true)?;
    let mut arc = gold_arc(&stream, bin)?;
    if a.standardize {
        arc = arc.standardize()?;
    }
    let path = ctx.table_path(a.out.as_deref(), "gold");
    write_arc(ctx, &path, ctx.manifest(false, a), &[&input], &arc)
}

fn oracle(ctx: &Context, a: &OracleArgs) -> Result<()> {
    let labels = parse_label_set(&a.labels)?;
    let cfg = OracleConfig::new(a.accuracy, labels.clone(), ctx.seed())?;
    let (input, stream) = match &a.data.input {
        Some(_) => {
            let (p, s) = load_data(&a.data, true)?;
            (Some(p), s)
        }
        None => (None, LabeledStream::from_golds(&sorted_labels(a.n, &labels, ctx.seed()))),
    };
    let predicted = oracle_labels(&stream, &cfg)?;
    let golds = stream.golds()?;
    let hits = predicted.iter().zip(&golds).filter(|(p, g)| p == g).count();
    let path = ctx.output_path(&a.out);
    let inputs: Vec<&Path> = input.iter().map(PathBuf::as_path).collect();
    let column: Vec<String> = predicted.iter().map(f64::to_string).collect();
    ctx.write_output(&path, ctx.manifest(true, a), &inputs, |w| {
        write_dataset(w, &stream, &[("predicted", column)])
    })?;
    let realized = hits as f64 / golds.len().max(1) as f64;
    report(
        ctx,
        json!({
            "instances": golds.len(),
            "accuracy": a.accuracy,
            "realized_accuracy": realized,
            "random_baseline": cfg.random_baseline(),
            "output": path,
        }),
        &format!(
            "{} instances, realized accuracy {:.4} (random baseline {:.4})",
            golds.len(),
            realized,
            cfg.random_baseline()
        ),
    );
    Ok(())
}

fn parse_pair<T: std::str::FromStr>(s: &str, what: &str) -> Result<(T, T)> {
    let parsed = s
        .split_once(':')
        .and_then(|(lo, hi)| Some((lo.trim().parse().ok()?, hi.trim().parse().ok()?)));
    match parsed {
        Some(p) => Ok(p),
        None => bail!("{what} must look like lo:hi, got {s:?}"),
    }
}

fn dynamic(ctx: &Context, a: &DynamicArgs) -> Result<()> {
    let spec = WaveSpec {
        n_crests: a.crests,
        n_troughs: a.troughs,
        amplitude: parse_pair(&a.amp, "--amp")?,
        width: parse_pair(&a.width, "--width")?,
        k: a.k,
        arc_bin: a.arc_bin,
        seed: ctx.seed(),
    };
    let (input, source) = match &a.data.input {
        Some(_) => {
            let (p, s) = load_data(&a.data, true)?;
            (Some(p), s)
        }
        None => (
            None,
            generate(&CorpusSpec {
                seed: ctx.seed(),
                ..CorpusSpec::default()
            })
            .stream,
        ),
    };
    let dy = synthesize_dynamic(&source, &spec)?;
    let path = ctx.output_path(&a.out);
    let inputs: Vec<&Path> = input.iter().map(PathBuf::as_path).collect();
    let extra = [
        ("source_index", dy.source_indices.iter().map(usize::to_string).collect()),
        ("target", dy.target_labels.iter().map(f64::to_string).collect()),
    ];
    ctx.write_output(&path, ctx.manifest(true, a), &inputs, |w| {
        write_dataset(w, &dy.stream, &extra)
    })?;
    report(
        ctx,
        json!({
            "instances": dy.stream.len(),
            "target_crests": dy.target_crests,
            "target_troughs": dy.target_troughs,
            "arc_crests": dy.arc_crests,
            "arc_troughs": dy.arc_troughs,
            "output": path,
        }),
        &format!(
            "{} instances; target {} crests, {} troughs; gold arc (bin {}) {} crests, {} troughs",
            dy.stream.len(),
            dy.target_crests,
            dy.target_troughs,
            a.arc_bin,
            dy.arc_crests,
            dy.arc_troughs
        ),
    );
    Ok(())
}

fn eval(ctx: &Context, a: &EvalArgs) -> Result<()> {
    let bin = BinSpec::new(a.bin, a.mode)?;
    let pred = read_arc(&a.pred, bin)?;
    let gold = read_arc(&a.gold, bin)?;
    let params = RunParams {
        dataset: a.gold.display().to_string(),
        method: "external".into(),
        bin_size: a.bin,
        bin_mode: Some(a.mode),
        seed: a.baseline.as_ref().map(|_| ctx.seed()),
        ..RunParams::default()
    };
    let rep = evaluate(&pred, &gold, params)?;
    let boot = match &a.baseline {
        Some(b) => {
            let base = read_arc(b, bin)?;
            Some(bootstrap_difference(&pred, &base, &gold, a.resamples, ctx.seed())?)
        }
        None => None,
    };
    let value = json!({"report": rep, "bootstrap": boot});
    if let Some(out) = &a.out {
        let path = ctx.output_path(out);
        let mut inputs = vec![a.pred.as_path(), a.gold.as_path()];
        if let Some(b) = &a.baseline {
            inputs.push(b);
        }
        ctx.write_output(&path, ctx.manifest(boot.is_some(), a), &inputs, |mut w| {
            use std::io::Write;
            serde_json::to_writer_pretty(&mut w, &value)?;
            writeln!(w)?;
            w.flush()
        })?;
    }
    if ctx.json {
        println!("{value}");
        return Ok(());
    }
    println!(
        "rho {:.6}  points {}  excluded {}  ties {}",
        rep.rho, rep.n_points, rep.n_excluded, rep.tie_method
    );
    if let Some(b) = boot {
        println!(
            "vs baseline: rho {:.6} -> delta {:+.6}  95% CI [{:+.6}, {:+.6}]  p {:.4}  ({} resamples)",
            b.rho_b, b.delta, b.ci_low, b.ci_high, b.p_value, b.resamples
        );
    }
    Ok(())
}

fn sweep(ctx: &Context, a: &SweepArgs) -> Result<()> {
    let cfg = SweepConfig::load(&a.config)?;
    let out_dir = ctx.output_path(&a.out);
    let opts = SweepOptions {
        retry_errors: a.retry_errors,
        json: ctx.json,
    };
    let outcome = run_sweep(&cfg, &out_dir, &opts)?;
    let mut manifest = ctx.manifest(true, &json!({"args": a, "sweep": cfg}));
    manifest.seed = None;
    manifest.add_input(&a.config)?;
    for p in &outcome.inputs {
        manifest.add_input(p)?;
    }
    for p in &outcome.outputs {
        manifest.add_output(p)?;
    }
    manifest.write(manifest_path_for(out_dir.join("sweep")))?;
    let errors = outcome.errors();
    report(
        ctx,
        json!({
            "cells": outcome.table.len(),
            "computed": outcome.computed,
            "cached": outcome.reused,
            "errors": errors,
            "outputs": outcome.outputs,
        }),
        &format!(
            "{} cells ({} computed, {} cached), {} errors -> {}",
            outcome.table.len(),
            outcome.computed,
            outcome.reused,
            errors,
            out_dir.display()
        ),
    );
    if errors > 0 {
        bail!(
            "{errors} of {} cells failed; see the error column of {}",
            outcome.table.len(),
            outcome.outputs[0].display()
        );
    }
    Ok(())
}

fn plot(ctx: &Context, a: &PlotArgs) -> Result<()> {
    let mut series = Vec::new();
    let mut inputs = Vec::new();
    for spec in &a.arcs {
        let (label, path) = match spec.split_once('=') {
            Some((l, p)) => (l.to_string(), PathBuf::from(p)),
            None => {
                let p = PathBuf::from(spec);
                let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned());
                (stem.unwrap_or_else(|| spec.clone()), p)
            }
        };
        let arc = read_arc(&path, BinSpec::rolling(1)?).with_context(|| format!("reading {}", path.display()))?;
        series.push(Series::from_arc(label, &arc));
        inputs.push(path);
    }
    let opts = PlotOptions {
        width: a.width,
        height: a.height,
        title: a.title.clone(),
        x_label: a.x_label.clone(),
        y_label: a.y_label.clone(),
    };
    let svg = render_svg(&series, &opts);
    let path = ctx.output_path(&a.out);
    let inputs: Vec<&Path> = inputs.iter().map(PathBuf::as_path).collect();
    ctx.write_output(&path, ctx.manifest(false, a), &inputs, |mut w| {
        use std::io::Write;
        w.write_all(svg.as_bytes())?;
        w.flush()
    })
}
