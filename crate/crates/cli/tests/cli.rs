use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn emoarc(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_emoarc"))
        .args(args)
        .current_dir(dir)
        .env_remove("EMOARC_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn labeled_tsv(dir: &Path, n: usize) {
    let words = ["awful", "sad", "okay", "nice", "great"];
    let mut s = String::from("text\tlabel\n");
    for i in 0..n {
        let l = (i * 7 + i / 3) % 5;
        s.push_str(&format!("so {} today #{i}\t{}\n", words[l], l as i64 - 2));
    }
    fs::write(dir.join("data.tsv"), s).unwrap();
    fs::write(
        dir.join("lex.tsv"),
        "# toy valence lexicon\nawful\t-0.9\nsad\t-0.6\nokay\t0.1\nnice\t0.5\ngreat\t0.8\ngreat\t0.8\n",
    )
    .unwrap();
}

#[test]
fn gold_arc_has_n_minus_b_plus_one_rows() {
    let dir = tempfile::tempdir().unwrap();
    labeled_tsv(dir.path(), 500);
    ok(&emoarc(dir.path(), &["gold", "--input", "data.tsv", "--bin", "300", "--mode", "rolling"]));
    let csv = fs::read_to_string(dir.path().join("gold.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 201);
    assert!(dir.path().join("gold.csv.manifest.json").exists());

    ok(&emoarc(dir.path(), &["gold", "--input", "data.tsv", "--bin", "30", "--mode", "tumbling", "--out", "t.csv"]));
    let csv = fs::read_to_string(dir.path().join("t.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 16);
}

#[test]
fn zero_bin_is_a_runtime_error_naming_the_constraint() {
    let dir = tempfile::tempdir().unwrap();
    labeled_tsv(dir.path(), 50);
    let out = emoarc(dir.path(), &["gold", "--input", "data.tsv", "--bin", "0"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bin size must be at least 1"), "{err}");
    assert!(!dir.path().join("gold.csv").exists());
}

#[test]
fn unknown_flag_prints_usage_and_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = emoarc(dir.path(), &["gold", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));

    let out = emoarc(dir.path(), &["gold", "--bin", "3"]);
    assert_eq!(out.status.code(), Some(2), "missing --input is a usage error");
}

#[test]
fn lexicon_validate_reports_counts_histogram_and_duplicates() {
    let dir = tempfile::tempdir().unwrap();
    labeled_tsv(dir.path(), 10);
    let text = ok(&emoarc(dir.path(), &["lexicon", "validate", "lex.tsv", "--kind", "cont", "--range", "-1..1"]));
    assert!(text.contains("entries    5"), "{text}");
    assert!(text.contains("histogram"));
    assert!(text.contains("great\tline 7"), "{text}");

    let json = ok(&emoarc(
        dir.path(),
        &["--json", "lexicon", "validate", "lex.tsv", "--kind", "cont", "--range", "-1..1", "--buckets", "4"],
    ));
    let v: serde_json::Value = serde_json::from_str(json.trim()).unwrap();
    assert_eq!(v["entries"], 5);
    assert_eq!(v["histogram"].as_array().unwrap().len(), 4);
    assert_eq!(v["duplicates"].as_array().unwrap().len(), 1);

    let out = emoarc(dir.path(), &["lexicon", "validate", "lex.tsv", "--kind", "cont", "--range", "0..1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn lexicon_threshold_and_binarize_write_loadable_files() {
    let dir = tempfile::tempdir().unwrap();
    labeled_tsv(dir.path(), 10);
    ok(&emoarc(dir.path(), &["lexicon", "threshold", "lex.tsv", "--threshold", "0.55", "--out", "strong.tsv"]));
    assert_eq!(
        fs::read_to_string(dir.path().join("strong.tsv")).unwrap(),
        "awful\t-0.9\ngreat\t0.8\nsad\t-0.6\n"
    );
    ok(&emoarc(
        dir.path(),
        &["lexicon", "binarize", "lex.tsv", "--cutoffs", "-0.333,0.333", "--to", "-1,0,1", "--out", "cat.tsv"],
    ));
    ok(&emoarc(dir.path(), &["lexicon", "validate", "cat.tsv", "--kind", "cat", "--range", "-1..1"]));
}

#[test]
fn score_rows_per_instance() {
    let dir = tempfile::tempdir().unwrap();
    labeled_tsv(dir.path(), 20);
    ok(&emoarc(dir.path(), &["score", "--lexicon", "lex.tsv", "--oov", "zero", "--input", "data.tsv"]));
    let csv = fs::read_to_string(dir.path().join("scores.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("index,score,token_count,in_vocab_count"));
    // "so awful today #0": the hashtag number is dropped, 3 tokens, 1 known
    assert_eq!(lines.next(), Some("0,-0.3,3,1"));
    assert_eq!(lines.count(), 19);
}

#[test]
fn oracle_gold_eval_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&emoarc(d, &["--seed", "5", "oracle", "--accuracy", "1.0", "--labels", "-3..3", "--n", "1000"]));
    ok(&emoarc(d, &["gold", "--input", "oracle.csv", "--bin", "100", "--out", "g.csv"]));
    ok(&emoarc(d, &["gold", "--input", "oracle.csv", "--label-column", "predicted", "--bin", "100", "--out", "p.csv"]));
    let text = ok(&emoarc(d, &["eval", "--pred", "p.csv", "--gold", "g.csv", "--bin", "100"]));
    assert!(text.starts_with("rho 1.000000  points 901  excluded 0"), "{text}");

    ok(&emoarc(d, &["--seed", "5", "oracle", "--accuracy", "0.3", "--n", "1000", "--out", "o3.csv"]));
    ok(&emoarc(d, &["gold", "--input", "o3.csv", "--label-column", "predicted", "--bin", "100", "--out", "p3.csv"]));
    let json = ok(&emoarc(
        d,
        &["--json", "eval", "--pred", "p.csv", "--gold", "g.csv", "--baseline", "p3.csv", "--resamples", "200", "--out", "r.json"],
    ));
    let v: serde_json::Value = serde_json::from_str(json.trim()).unwrap();
    assert_eq!(v["report"]["rho"], 1.0);
    assert!(v["bootstrap"]["delta"].as_f64().unwrap() > 0.0);
    assert!(d.join("r.json.manifest.json").exists());
}

#[test]
fn identical_runs_give_identical_outputs_and_manifests() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [a.path(), b.path()] {
        ok(&emoarc(d, &["--seed", "11", "oracle", "--accuracy", "0.4", "--n", "800"]));
    }
    for f in ["oracle.csv", "oracle.csv.manifest.json"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.path().join("oracle.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 11);
    assert_eq!(m["command"][0], "--seed");
    assert_eq!(m["outputs"][0]["sha256"].as_str().unwrap().len(), 64);

    ok(&emoarc(a.path(), &["--seed", "12", "oracle", "--accuracy", "0.4", "--n", "800"]));
    assert_ne!(
        fs::read(a.path().join("oracle.csv")).unwrap(),
        fs::read(b.path().join("oracle.csv")).unwrap()
    );
}

#[test]
fn arc_json_output_and_out_dir_env() {
    let dir = tempfile::tempdir().unwrap();
    labeled_tsv(dir.path(), 60);
    let status = Command::new(env!("CARGO_BIN_EXE_emoarc"))
        .args(["--json", "arc", "--lexicon", "lex.tsv", "--input", "data.tsv", "--bin", "10", "--standardize"])
        .current_dir(dir.path())
        .env("EMOARC_OUT_DIR", "runs")
        .status()
        .unwrap();
    assert!(status.success());
    let text = fs::read_to_string(dir.path().join("runs/arc.jsonl")).unwrap();
    assert_eq!(text.lines().count(), 51);
    let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert_eq!(first["position"], 0);
    assert!(dir.path().join("runs/arc.jsonl.manifest.json").exists());
}

#[test]
fn dynamic_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let text = ok(&emoarc(
        d,
        &["--seed", "2", "dynamic", "--crests", "12", "--troughs", "10", "--amp", "0.5:3.0", "--width", "20:60"],
    ));
    assert!(text.contains("target 12 crests, 10 troughs"), "{text}");
    let csv = fs::read_to_string(d.join("dynamic.csv")).unwrap();
    assert!(csv.starts_with("index,text,label,source_index,target\n"));

    ok(&emoarc(d, &["gold", "--input", "dynamic.csv", "--bin", "20", "--out", "g.csv"]));
    ok(&emoarc(d, &["gold", "--input", "dynamic.csv", "--label-column", "target", "--bin", "20", "--out", "t.csv"]));
    ok(&emoarc(d, &["plot", "gold=g.csv", "t.csv", "--title", "wave", "--out", "wave.svg"]));
    let svg = fs::read_to_string(d.join("wave.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains(">gold<") && svg.contains(">t<"));

    let out = emoarc(d, &["dynamic", "--amp", "3"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn sweep_runs_resumes_and_flags_errors() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    labeled_tsv(d, 400);
    let config = r#"
        bin_sizes = [1, 10, 50, 100, 200, 300]
        oov = ["skip", "zero"]
        kinds = ["cat", "cont"]

        [[dataset]]
        id = "toy"
        emotion = "valence"
        path = "data.tsv"

        [[lexicon]]
        id = "toy"
        emotion = "valence"
        kind = "cont"
        path = "lex.tsv"
        range = "-1..1"
        binarize = { id = "toy-cat", cutoffs = [-0.333, 0.333], labels = [-1, 0, 1] }
    "#;
    fs::write(d.join("sweep.toml"), config).unwrap();
    let text = ok(&emoarc(d, &["sweep", "--config", "sweep.toml", "--out", "results"]));
    assert!(text.starts_with("24 cells (24 computed, 0 cached), 0 errors"), "{text}");
    let table = fs::read(d.join("results/results.csv")).unwrap();
    assert_eq!(String::from_utf8_lossy(&table).lines().count(), 25);
    assert!(d.join("results/summary.csv").exists());
    assert!(d.join("results/sweep.manifest.json").exists());

    let text = ok(&emoarc(d, &["sweep", "--config", "sweep.toml", "--out", "results"]));
    assert!(text.starts_with("24 cells (0 computed, 24 cached)"), "{text}");
    assert_eq!(fs::read(d.join("results/results.csv")).unwrap(), table);

    fs::write(d.join("bad.toml"), config.replace("300]", "300, 5000]")).unwrap();
    let out = emoarc(d, &["sweep", "--config", "bad.toml", "--out", "bad"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("4 of 28 cells failed"));
}
