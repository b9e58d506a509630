use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const LABELS: [&str; 3] = ["entailment", "neutral", "contradiction"];

fn explkit(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_explkit"))
        .current_dir(dir)
        .env_remove("EXPLKIT_CONFIG")
        .env_remove("EXPLKIT_DATA_DIR")
        .env_remove("EXPLKIT_RESULTS_DIR")
        .env_remove("EXPLKIT_BACKEND_URL")
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = explkit(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn error_record(out: &Output) -> Value {
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    let last = stderr.lines().last().expect("an error line");
    let v: Value = serde_json::from_str(last).expect("machine-readable error");
    assert!(v["message"].as_str().is_some_and(|m| !m.is_empty()));
    v
}

/// Ten training rows and six dev rows of e-SNLI CSV, ingested to JSONL.
fn fixture() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    let mut train = String::from("pairID,gold_label,Sentence1,Sentence2,Explanation_1\n");
    for i in 0..10 {
        train.push_str(&format!(
            "t{i},{},\"A dog runs, case {i}.\",An animal moves {i}.,Dogs are animals {i}.\n",
            LABELS[i % 3]
        ));
    }
    let mut dev =
        String::from("pairID,gold_label,Sentence1,Sentence2,Explanation_1,Explanation_2\n");
    for i in 0..6 {
        dev.push_str(&format!(
            "d{i},{},A man sleeps {i}.,A person rests {i}.,Sleeping is resting {i}.,A man is a person {i}.\n",
            LABELS[i % 3]
        ));
    }
    std::fs::write(dir.path().join("train.csv"), train).unwrap();
    std::fs::write(dir.path().join("dev.csv"), dev).unwrap();
    for split in ["train", "dev"] {
        ok(
            dir.path(),
            &[
                "ingest",
                "--format",
                "esnli",
                "--split",
                split,
                "--in",
                &format!("{split}.csv"),
                "--out",
                &format!("{split}.jsonl"),
            ],
        );
    }
    dir
}

#[test]
fn ingest_and_stats() {
    let dir = fixture();
    let stats: Value = serde_json::from_str(&ok(
        dir.path(),
        &["stats", "--dataset", "train.jsonl", "--json"],
    ))
    .unwrap();
    assert_eq!(stats["count"], 10);
    let text = ok(dir.path(), &["stats", "--dataset", "dev.jsonl"]);
    assert!(text.contains("instances          6"));
    assert!(text.contains("explanations       12"));
}

#[test]
fn compile_pte_at_thirty_percent() {
    let dir = fixture();
    let out = ok(
        dir.path(),
        &[
            "compile",
            "--dataset",
            "train.jsonl",
            "--structure",
            "pte",
            "--budget",
            "30",
            "--out",
            "pairs",
        ],
    );
    assert!(out.contains("pte_predictor\t10"), "{out}");
    assert!(out.contains("pte_explainer\t3"), "{out}");
    let first = std::fs::read(dir.path().join("pairs/pte_explainer.jsonl")).unwrap();
    ok(
        dir.path(),
        &[
            "compile",
            "--dataset",
            "train.jsonl",
            "--structure",
            "pte",
            "--budget",
            "30",
            "--out",
            "pairs",
        ],
    );
    let second = std::fs::read(dir.path().join("pairs/pte_explainer.jsonl")).unwrap();
    assert_eq!(first, second);
}

#[test]
fn seed_changes_the_sample() {
    let dir = fixture();
    let mut files = Vec::new();
    for seed in ["1", "2", "3", "4"] {
        ok(
            dir.path(),
            &[
                "compile",
                "--seed",
                seed,
                "--dataset",
                "train.jsonl",
                "--structure",
                "etp",
                "--budget",
                "30",
                "--out",
                &format!("p{seed}"),
            ],
        );
        files.push(std::fs::read(dir.path().join(format!("p{seed}/etp_explainer.jsonl"))).unwrap());
    }
    assert!(files.windows(2).any(|w| w[0] != w[1]));
}

#[test]
fn train_infer_evaluate_with_the_oracle() {
    let dir = fixture();
    let p = dir.path();
    ok(
        p,
        &[
            "compile",
            "--dataset",
            "train.jsonl",
            "--structure",
            "pte",
            "--out",
            "pairs",
        ],
    );
    let job: Value = serde_json::from_str(&ok(
        p,
        &[
            "train",
            "--pairs",
            "pairs/pte_predictor.jsonl",
            "--stage",
            "pte_predictor",
            "--hyper",
            "epochs=1",
            "--poll-ms",
            "1",
        ],
    ))
    .unwrap();
    assert_eq!(job["state"], "done");
    assert_eq!(job["pairs"], 10);
    assert_eq!(job["model"], "pte_predictor");

    for structure in ["joint", "etp", "etp_sl", "pte"] {
        let gens = format!("gens-{structure}.jsonl");
        ok(
            p,
            &[
                "infer",
                "--dataset",
                "dev.jsonl",
                "--structure",
                structure,
                "--out",
                &gens,
            ],
        );
        let report: Value = serde_json::from_str(&ok(
            p,
            &["evaluate", "--generations", &gens, "--dataset", "dev.jsonl"],
        ))
        .unwrap();
        assert_eq!(report["accuracy"], 1.0, "{structure}");
        assert!((report["bleu"].as_f64().unwrap() - 100.0).abs() < 1e-9);
        assert_eq!(report["n_evaluated"], 6);
    }
    let table = ok(
        p,
        &[
            "evaluate",
            "--generations",
            "gens-pte.jsonl",
            "--dataset",
            "dev.jsonl",
            "--table",
            "--name",
            "PtE",
        ],
    );
    assert!(table.contains("PtE"));
}

#[test]
fn train_rejects_mismatched_stage() {
    let dir = fixture();
    ok(
        dir.path(),
        &[
            "compile",
            "--dataset",
            "train.jsonl",
            "--structure",
            "pte",
            "--out",
            "pairs",
        ],
    );
    let out = explkit(
        dir.path(),
        &[
            "train",
            "--pairs",
            "pairs/pte_predictor.jsonl",
            "--stage",
            "joint",
        ],
    );
    assert_eq!(error_record(&out)["error"], "invalid_input");
}

#[test]
fn explain_prints_true_and_predicted_variants() {
    let dir = fixture();
    let out = ok(
        dir.path(),
        &["explain", "--dataset", "dev.jsonl", "--id", "d1"],
    );
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 2, "{out}");
    assert_eq!(lines[0], "true\tneutral\tSleeping is resting 1.");
    assert_eq!(lines[1], "predicted\tneutral\tSleeping is resting 1.");
    let out = explkit(
        dir.path(),
        &[
            "explain",
            "--dataset",
            "dev.jsonl",
            "--id",
            "d1",
            "--label",
            "maybe",
        ],
    );
    assert_eq!(error_record(&out)["error"], "label_vocabulary");
}

#[test]
fn informedness_with_a_gold_copy() {
    let dir = fixture();
    let p = dir.path();
    let mut copy = String::new();
    for (split, n, prefix, expl) in [
        ("train", 10, "t", "Dogs are animals"),
        ("dev", 6, "d", "Sleeping is resting"),
    ] {
        let _ = split;
        for i in 0..n {
            copy.push_str(&format!(
                "{{\"id\":\"{prefix}{i}\",\"explanation\":\"{expl} {i}.\"}}\n"
            ));
        }
    }
    std::fs::write(p.join("copy.jsonl"), copy).unwrap();
    let out = ok(
        p,
        &[
            "informedness",
            "--train",
            "train.jsonl",
            "--dataset",
            "dev.jsonl",
            "--source",
            "copy=copy.jsonl",
            "--poll-ms",
            "1",
        ],
    );
    let rows: Vec<&str> = out.lines().skip(2).collect();
    assert_eq!(rows.len(), 2, "{out}");
    assert!(rows[0].starts_with("gold (R*)"));
    assert!(rows.iter().all(|r| r.ends_with("100.00 (100.00)")), "{out}");
}

#[test]
fn failures_are_machine_readable() {
    let dir = tempfile::tempdir().unwrap();
    let out = explkit(dir.path(), &["stats", "--dataset", "missing_train.jsonl"]);
    assert_eq!(error_record(&out)["error"], "io");

    let out = explkit(dir.path(), &["stats", "--dataset", "nosplit.jsonl"]);
    assert_eq!(error_record(&out)["error"], "invalid_input");
}

#[test]
fn unknown_flags_are_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = explkit(dir.path(), &["stats", "--dataset", "x", "--frobnicate"]);
    assert!(!out.status.success());
    assert_ne!(out.status.code(), Some(0));
}

#[test]
fn help_lists_every_command() {
    let dir = tempfile::tempdir().unwrap();
    let help = ok(dir.path(), &["--help"]);
    for cmd in [
        "ingest",
        "stats",
        "compile",
        "train",
        "infer",
        "evaluate",
        "explain",
        "informedness",
        "grid",
    ] {
        assert!(help.contains(cmd), "{cmd}");
    }
}

#[test]
fn remote_backend_needs_a_url() {
    let dir = fixture();
    let out = explkit(
        dir.path(),
        &[
            "infer",
            "--dataset",
            "dev.jsonl",
            "--structure",
            "pte",
            "--out",
            "g.jsonl",
            "--backend",
            "remote",
        ],
    );
    let err = error_record(&out);
    assert_eq!(err["error"], "invalid_input");
    assert!(err["message"].as_str().unwrap().contains("backend-url"));
}

#[test]
fn data_dir_from_env_and_config_file() {
    let dir = fixture();
    let elsewhere = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_explkit"))
        .current_dir(elsewhere.path())
        .env("EXPLKIT_DATA_DIR", dir.path())
        .args(["stats", "--dataset", "train.jsonl", "--json"])
        .output()
        .unwrap();
    assert!(out.status.success());

    let conf = elsewhere.path().join("explkit.conf");
    std::fs::write(&conf, format!("data_dir = {}\n", dir.path().display())).unwrap();
    let out = ok(
        elsewhere.path(),
        &[
            "--config",
            conf.to_str().unwrap(),
            "stats",
            "--dataset",
            "dev.jsonl",
            "--json",
        ],
    );
    let stats: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(stats["count"], 6);
}

fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(
                    path.strip_prefix(root).unwrap().to_path_buf(),
                    std::fs::read(&path).unwrap(),
                );
            }
        }
    }
    out
}

#[test]
fn grid_layout_and_reruns_are_identical() {
    let dir = fixture();
    let p = dir.path();
    std::fs::write(
        p.join("plan.json"),
        r#"{"dataset":"esnli","train":"train.jsonl","dev":"dev.jsonl",
            "budgets":[30,100],"seeds":[5],"repetitions":2,"jobs":3,"poll_interval_ms":1}"#,
    )
    .unwrap();
    let out = ok(
        p,
        &[
            "--results-dir",
            "r1",
            "grid",
            "--plan",
            "plan.json",
            "--mock-latency-ms",
            "2",
        ],
    );
    assert!(out.contains("16 runs (0 failed)"), "{out}");
    ok(
        p,
        &[
            "--results-dir",
            "r2",
            "grid",
            "--plan",
            "plan.json",
            "--jobs",
            "1",
            "--mock-latency-ms",
            "2",
        ],
    );
    let (a, b) = (tree(&p.join("r1")), tree(&p.join("r2")));
    assert_eq!(a.keys().collect::<Vec<_>>(), b.keys().collect::<Vec<_>>());
    // plan.json records the --jobs override; everything else must match
    for (path, bytes) in a
        .iter()
        .filter(|(k, _)| k.as_path() != Path::new("plan.json"))
    {
        assert_eq!(bytes, &b[path], "{} differs", path.display());
    }

    for name in ["plan.json", "summary.tsv", "summary.txt", "efficiency.txt"] {
        assert!(a.contains_key(Path::new(name)), "{name}");
    }
    for rel in [
        "etp_sl-b30/rep1/pairs/etp_explainer.jsonl",
        "etp_sl-b30/rep1/pairs/etp_predictor.jsonl",
        "etp_sl-b30/rep1/generations/dev.jsonl",
        "etp_sl-b30/rep1/report.json",
        "etp_sl-b30/rep1/ledger.json",
        "pte-b100/rep0/pairs/pte_predictor.jsonl",
        "joint-b30/rep0/pairs/joint.jsonl",
    ] {
        assert!(a.contains_key(Path::new(rel)), "{rel}");
    }
    let report: Value = serde_json::from_slice(&a[Path::new("pte-b30/rep0/report.json")]).unwrap();
    assert_eq!(report["reports"]["dev"]["accuracy"], 1.0);
    assert_eq!(report["pair_counts"]["pte_predictor"], 10);
    assert_eq!(report["pair_counts"]["pte_explainer"], 3);
    let efficiency = String::from_utf8(a[Path::new("efficiency.txt")].clone()).unwrap();
    assert!(!efficiency.contains("VIOLATED"), "{efficiency}");
}
