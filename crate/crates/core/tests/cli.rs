use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use stackner::synthetic::{brat_documents, corpus_text, eos_sentences, ner_corpus};

fn stackner(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stackner"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = stackner(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_brat_fixture(dir: &Path) {
    fs::create_dir_all(dir).unwrap();
    for (id, txt, ann, _) in brat_documents(3, 6, 21) {
        fs::write(dir.join(format!("{id}.txt")), txt).unwrap();
        fs::write(dir.join(format!("{id}.ann")), ann).unwrap();
    }
}

#[test]
fn version_and_usage_errors() {
    let out = stackner(&["--version"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("stackner "));

    let out = stackner(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error kind=UnknownSubcommand"));

    let out = stackner(&["tag", "--in", "x.txt", "--out-ann", "y.ann"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error kind=InvalidFlag") && err.contains("--model"), "{err}");
}

#[test]
fn runtime_errors_exit_one_with_kind() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.bin");
    let out = stackner(&["tag", "--model", s(&missing), "--in", "x.txt", "--out-ann", "y.ann"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error kind="));
}

#[test]
fn eval_identical_directories_is_perfect() {
    let dir = tempfile::tempdir().unwrap();
    let gold = dir.path().join("gold");
    write_brat_fixture(&gold);
    let summary = dir.path().join("summary.txt");
    let stdout = ok(&["eval", "--gold", s(&gold), "--pred", s(&gold), "--summary", s(&summary)]);
    assert!(stdout.contains("F1 100.00"), "{stdout}");
    assert!(fs::read_to_string(&summary).unwrap().contains("f1=100.0000"));
}

#[test]
fn convert_and_export_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let brat = dir.path().join("brat");
    let conll = dir.path().join("conll");
    let back = dir.path().join("back");
    write_brat_fixture(&brat);
    ok(&["convert", "--txt-dir", s(&brat), "--ann-dir", s(&brat), "--out", s(&conll)]);
    fs::create_dir_all(&back).unwrap();
    for id in ["doc000", "doc001", "doc002"] {
        ok(&[
            "export-brat",
            "--conll",
            s(&conll.join(format!("{id}.conll"))),
            "--offsets",
            s(&conll.join(format!("{id}.offsets"))),
            "--out-ann",
            s(&back.join(format!("{id}.ann"))),
            "--txt",
            s(&brat.join(format!("{id}.txt"))),
        ]);
    }
    let stdout = ok(&["eval", "--gold", s(&brat), "--pred", s(&back)]);
    assert!(stdout.contains("F1 100.00"), "{stdout}");
    // converted CoNLL directories are accepted as evaluation input too
    let stdout = ok(&["eval", "--gold", s(&brat), "--pred", s(&conll)]);
    assert!(stdout.contains("F1 100.00"), "{stdout}");
}

#[test]
fn small_pipeline_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name);

    let sentences = ner_corpus(30, 4);
    fs::write(p("corpus.txt"), corpus_text(&sentences)).unwrap();
    fs::write(p("train.conll"), stackner::corpus::write_conll(&sentences)).unwrap();
    fs::write(p("eos.txt"), eos_sentences(200, 1).join("\n")).unwrap();

    ok(&["train-eos", "--sentences", s(&p("eos.txt")), "--out", s(&p("eos.bin")), "--epochs", "2"]);
    fs::write(p("doc.txt"), "Se pautó amoxicilina oral. Control en dos semanas.").unwrap();
    ok(&["split", "--model", s(&p("eos.bin")), "--in", s(&p("doc.txt")), "--out", s(&p("doc.split"))]);
    assert_eq!(fs::read_to_string(p("doc.split")).unwrap().lines().count(), 2);

    ok(&["learn-bpe", "--corpus", s(&p("corpus.txt")), "--vocab-size", "80", "--out", s(&p("merges.txt"))]);
    ok(&["segment", "--merges", s(&p("merges.txt")), "--in", s(&p("doc.txt")), "--out", s(&p("doc.seg"))]);
    let corpus = p("corpus.txt");
    let common = ["--corpus", s(&corpus), "--dim", "8", "--epochs", "1", "--min-count", "1"];
    let embed = |extra: &[&str]| {
        let mut a = vec!["train-embed"];
        a.extend_from_slice(&common);
        a.extend_from_slice(extra);
        ok(&a)
    };
    embed(&["--variant", "structured", "--out", s(&p("w.vec"))]);
    embed(&["--variant", "subword", "--buckets", "500", "--out", s(&p("sub.vec"))]);
    embed(&["--merges", s(&p("merges.txt")), "--out", s(&p("pieces.vec"))]);
    assert!(p("sub.vec.ngrams").exists() && p("sub.vec.ngrams.vec").exists());

    for dir_name in ["fwd", "bwd"] {
        ok(&[
            "train-lm",
            "--direction",
            dir_name,
            "--corpus",
            s(&p("corpus.txt")),
            "--hidden",
            "8",
            "--embed-dim",
            "4",
            "--epochs",
            "1",
            "--out",
            s(&p(&format!("{dir_name}.lm"))),
        ]);
    }

    let stack = format!(
        "pce={}+{}@min,static={},subword={},bpe={}+{}",
        s(&p("fwd.lm")),
        s(&p("bwd.lm")),
        s(&p("w.vec")),
        s(&p("sub.vec")),
        s(&p("merges.txt")),
        s(&p("pieces.vec"))
    );
    let out = ok(&[
        "train",
        "--train",
        s(&p("train.conll")),
        "--dev",
        s(&p("train.conll")),
        "--stack",
        &stack,
        "--hidden",
        "8",
        "--max-epochs",
        "2",
        "--out",
        s(&p("tagger.bin")),
    ]);
    assert!(out.contains("best_epoch="), "{out}");

    ok(&[
        "tag",
        "--model",
        s(&p("tagger.bin")),
        "--in",
        s(&p("doc.txt")),
        "--out-ann",
        s(&p("doc.ann")),
        "--eos-model",
        s(&p("eos.bin")),
    ]);
    let ann = fs::read_to_string(p("doc.ann")).unwrap();
    assert!(stackner::eval::mentions_from_ann("doc", &ann).is_ok());

    fs::write(
        p("space.json"),
        r#"{"lr_choices":[0.1],"batch_choices":[8,16],"hidden_choices":[4],
            "dropout_range":[0.0,0.0],"layer_choices":[1],"budget":2,"mode":"grid","trial_max_epochs":1}"#,
    )
    .unwrap();
    let out = ok(&[
        "hpo",
        "--space",
        s(&p("space.json")),
        "--train",
        s(&p("train.conll")),
        "--dev",
        s(&p("train.conll")),
        "--stack",
        &format!("static={}", s(&p("w.vec"))),
        "--log",
        s(&p("hpo.tsv")),
    ]);
    assert!(out.contains("best lr=0.1"), "{out}");
    assert_eq!(fs::read_to_string(p("hpo.tsv")).unwrap().lines().count(), 3);
}
