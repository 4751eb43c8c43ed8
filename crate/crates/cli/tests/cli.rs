use std::net::TcpListener;
use std::path::Path;
use std::process::{Command, Output};
use std::sync::OnceLock;

use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_lfrerank"));
    c.env_remove("RUST_LOG");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// A demo directory shared by all tests in this file.
fn demo() -> &'static Path {
    static DIR: OnceLock<TempDir> = OnceLock::new();
    DIR.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let o = run(&["demo", "--out-dir", dir.path().to_str().unwrap(), "--epochs", "100", "--jobs", "2"]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        dir
    })
    .path()
}

fn p(name: &str) -> String {
    demo().join(name).to_str().unwrap().to_string()
}

fn out_path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_string()
}

#[test]
fn demo_writes_report() {
    let report = std::fs::read_to_string(demo().join("report.txt")).unwrap();
    assert!(report.contains("Avg."));
    assert!(report.contains("normalized exact match"));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(demo().join("report.json")).unwrap()).unwrap();
    assert_eq!(json["examples"], 200);
    assert_eq!(json["generator"]["oracle"]["10"], 0.95);
    for f in ["grammar.txt", "lexicon.tsv", "model_all_templated.json", "results/templated_always_oracle.jsonl"] {
        assert!(demo().join(f).exists(), "{f}");
    }
}

#[test]
fn rerank_with_oracle_and_evaluate() {
    let tmp = tempfile::tempdir().unwrap();
    let results = out_path(&tmp, "r.jsonl");
    let o = run(&[
        "rerank",
        "--dataset",
        &p("test_dataset.jsonl"),
        "--beams",
        &p("test_beams.jsonl"),
        "--method",
        "templated",
        "--grammar",
        &p("grammar.txt"),
        "--rule",
        "th3",
        "--scorer",
        "oracle",
        "--out",
        &results,
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let lines = std::fs::read_to_string(&results).unwrap();
    assert_eq!(lines.lines().count(), 200);
    let first: serde_json::Value = serde_json::from_str(lines.lines().next().unwrap()).unwrap();
    for key in ["id", "chosen_lf", "reranked", "fallback_reason", "scores"] {
        assert!(first.get(key).is_some(), "{key}");
    }

    let json = out_path(&tmp, "report.json");
    let o = run(&[
        "evaluate",
        "--dataset",
        &p("test_dataset.jsonl"),
        "--beams",
        &p("test_beams.jsonl"),
        "--results",
        &results,
        "--json",
        &json,
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("Oracle@10"));
    let rep: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(rep["micro_accuracy"], 0.95);
}

#[test]
fn oracle_command() {
    let o = run(&["oracle", "--dataset", &p("test_dataset.jsonl"), "--beams", &p("test_beams.jsonl")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), "generator_top1\t0.7000\noracle@1\t0.7000\noracle@10\t0.9500\noracle@25\t0.9500\n");
}

#[test]
fn unknown_rule_is_usage_error() {
    let o = run(&["rerank", "--dataset", "d", "--beams", "b", "--rule", "th9", "--scorer", "oracle", "--out", "x"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("Usage"), "{}", stderr(&o));
    assert!(stderr(&o).contains("th9"));
}

#[test]
fn missing_beam_file_is_data_error() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = out_path(&tmp, "no_such_beams.jsonl");
    let o = run(&[
        "rerank",
        "--dataset",
        &p("test_dataset.jsonl"),
        "--beams",
        &missing,
        "--scorer",
        "oracle",
        "--out",
        &out_path(&tmp, "r.jsonl"),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains(&missing), "{}", stderr(&o));
}

#[test]
fn missing_grammar_is_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&[
        "rerank",
        "--dataset",
        &p("test_dataset.jsonl"),
        "--beams",
        &p("test_beams.jsonl"),
        "--method",
        "templated",
        "--scorer",
        "oracle",
        "--out",
        &out_path(&tmp, "r.jsonl"),
    ]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn unreachable_remote_scorer_is_data_error() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&[
        "rerank",
        "--dataset",
        &p("test_dataset.jsonl"),
        "--beams",
        &p("test_beams.jsonl"),
        "--scorer",
        &format!("remote:http://127.0.0.1:{port}"),
        "--out",
        &out_path(&tmp, "r.jsonl"),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("unavailable"), "{}", stderr(&o));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("c.toml");
    std::fs::write(
        &config,
        format!(
            "jobs = 2\n[rerank]\ndataset = {:?}\nbeams = {:?}\nmethod = \"templated\"\ngrammar = {:?}\nscorer = \"constant:0.7\"\nrule = \"always\"\n",
            p("test_dataset.jsonl"),
            p("test_beams.jsonl"),
            p("grammar.txt")
        ),
    )
    .unwrap();
    let cfg = config.to_str().unwrap();
    let from_config = out_path(&tmp, "a.jsonl");
    let overridden = out_path(&tmp, "b.jsonl");
    let o = run(&["--config", cfg, "rerank", "--out", &from_config]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = run(&["--config", cfg, "rerank", "--scorer", "oracle", "--out", &overridden]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let count =
        |path: &str| std::fs::read_to_string(path).unwrap().lines().filter(|l| l.contains("\"reranked\":true")).count();
    // Constant scores tie, so nothing moves off rank 1; the oracle moves the
    // 50 examples whose gold sits below rank 1.
    let moved = |path: &str| {
        std::fs::read_to_string(path)
            .unwrap()
            .lines()
            .filter(|l| {
                let v: serde_json::Value = serde_json::from_str(l).unwrap();
                v["scores"].as_array().unwrap().iter().any(|s| s["score"] == 1.0 && s["rank"] != 1)
            })
            .count()
    };
    assert_eq!(count(&from_config), 200);
    assert_eq!(moved(&from_config), 0);
    assert_eq!(moved(&overridden), 50);
}

#[test]
fn outputs_are_byte_identical_across_runs_and_jobs() {
    let tmp = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for (i, jobs) in ["1", "4", "4"].iter().enumerate() {
        let pairs = out_path(&tmp, &format!("pairs{i}.jsonl"));
        let model = out_path(&tmp, &format!("model{i}.json"));
        let results = out_path(&tmp, &format!("results{i}.jsonl"));
        let data = ["--dataset", &p("train_dataset.jsonl"), "--beams", &p("train_beams.jsonl")];
        let o = bin()
            .args(["--jobs", jobs, "gen-pairs"])
            .args(data)
            .args(["--method", "entity_names", "--lexicon", &p("lexicon.tsv"), "--shuffle-seed", "3", "--out", &pairs])
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let o = run(&["train", "--pairs", &pairs, "--out", &model, "--epochs", "50"]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let o = run(&[
            "--jobs",
            jobs,
            "rerank",
            "--dataset",
            &p("test_dataset.jsonl"),
            "--beams",
            &p("test_beams.jsonl"),
            "--method",
            "entity_names",
            "--lexicon",
            &p("lexicon.tsv"),
            "--rule",
            "th3",
            "--scorer",
            &format!("baseline:{model}"),
            "--out",
            &results,
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        outputs.push([pairs, model, results].map(|f| std::fs::read(f).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[1], outputs[2]);
}

#[test]
fn normalize_command() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("lfs.txt");
    std::fs::write(
        &input,
        "(_lambda $0 e (_and (_flight $0) (_to $0 b)))\n\n(_lambda $5 e (_and (_to $5 b) (_flight $5)))\n",
    )
    .unwrap();
    let o = run(&["normalize", "--formalism", "lambda", "--input", input.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let lines: Vec<&str> = std::str::from_utf8(&o.stdout).unwrap().lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], lines[1]);

    std::fs::write(&input, "answer(x\n").unwrap();
    let o = run(&["normalize", "--formalism", "funql", "--input", input.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("lfs.txt:1"), "{}", stderr(&o));
}

#[test]
fn process_command() {
    let o = run(&[
        "process",
        "--dataset",
        &p("test_dataset.jsonl"),
        "--beams",
        &p("test_beams.jsonl"),
        "--method",
        "templated",
        "--grammar",
        &p("grammar.txt"),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 2000);
    let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert!(first["candidate_id"].as_str().unwrap().ends_with(":1"));
    assert_eq!(first["method"], "templated");
}

#[test]
fn help_and_bad_flags() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&[]).status.code(), Some(1));
    assert_eq!(run(&["oracle", "--dataset", "d", "--beams", "b", "--ks", "0"]).status.code(), Some(1));
    assert_eq!(run(&["--jobs", "0", "oracle", "--dataset", "d", "--beams", "b"]).status.code(), Some(1));
    assert_eq!(
        run(&["rerank", "--dataset", "d", "--beams", "b", "--scorer", "magic", "--out", "x"]).status.code(),
        Some(1)
    );
}
