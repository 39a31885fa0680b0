//! The `implang` binary: subcommands, outputs and exit codes.

mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::{completion, MockServer};

fn implang(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_implang"))
        .args(args)
        .env_remove("IMPLANG_API_KEY")
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(code(&implang(&[])), 1);
    assert_eq!(code(&implang(&["frobnicate"])), 1);
    assert_eq!(code(&implang(&["run", "--experiment", "syntax"])), 1);
    assert_eq!(
        code(&implang(&[
            "run",
            "--experiment",
            "syntax",
            "--condition",
            "grammarA",
            "--seed",
            "x"
        ])),
        1
    );
    let help = implang(&["--help"]);
    assert_eq!(code(&help), 0);
    assert!(stdout(&help).contains("rescore"));
}

#[test]
fn configuration_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path());
    let cases: Vec<Vec<&str>> = vec![
        vec![
            "generate",
            "--experiment",
            "morphology",
            "--condition",
            "9R9E",
        ],
        vec!["generate", "--experiment", "phonology", "--condition", "x"],
        vec![
            "run",
            "--experiment",
            "syntax",
            "--condition",
            "grammarA",
            "--learner",
            "oracle",
            "--out",
            out,
        ],
        vec![
            "run",
            "--experiment",
            "syntax",
            "--condition",
            "grammarA",
            "--config",
            "/nonexistent/implang.toml",
        ],
        vec![
            "suite",
            "--experiment",
            "morphology",
            "--learner",
            "remote",
            "--runs",
            "1",
            "--out",
            out,
        ],
        vec!["suite", "--condition", "grammarC", "--out", out],
    ];
    for args in cases {
        let o = implang(&args);
        assert_eq!(code(&o), 3, "{args:?}: {}", stderr(&o));
        assert!(stderr(&o).starts_with("error: "), "{args:?}");
    }

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[learner]\ntop_p = 2.0\n").unwrap();
    let o = implang(&[
        "run",
        "--experiment",
        "syntax",
        "--condition",
        "grammarA",
        "--config",
        path(&bad),
    ]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("top_p"), "{}", stderr(&o));

    std::fs::write(&bad, "[run]\nsed = 1\n").unwrap();
    let o = implang(&[
        "generate",
        "--experiment",
        "syntax",
        "--condition",
        "grammarA",
        "--config",
        path(&bad),
    ]);
    assert_eq!(code(&o), 3, "unknown keys are rejected");
}

#[test]
fn generate_prints_stimuli_json() {
    let o = implang(&[
        "generate",
        "--experiment",
        "morphology",
        "--condition",
        "3R6E",
        "--cell",
        "2",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["paragraphs"].as_array().unwrap().len(), 13);
    assert_eq!(v["test_items"].as_array().unwrap().len(), 12);
    assert_eq!(
        stdout(&o),
        stdout(&implang(&[
            "generate",
            "--experiment",
            "morphology",
            "--condition",
            "3R6E",
            "--cell",
            "2"
        ]))
    );
    assert_ne!(
        stdout(&o),
        stdout(&implang(&[
            "generate",
            "--experiment",
            "morphology",
            "--condition",
            "3R6E",
            "--cell",
            "1"
        ]))
    );

    let o = implang(&[
        "generate",
        "--experiment",
        "syntax",
        "--condition",
        "grammarB",
        "--seed",
        "5",
    ]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["blocks"].as_array().unwrap().len(), 6);
    assert_eq!(v["answers"].as_array().unwrap().len(), 7);
}

#[test]
fn grammar_file_replaces_the_builtin() {
    let dir = tempfile::tempdir().unwrap();
    let grammar = dir.path().join("g.txt");
    std::fs::write(
        &grammar,
        "start: S0\nexits: S1\nS0 X S1\nS1 V S1\nS1 T S0\n",
    )
    .unwrap();
    let o = implang(&[
        "generate",
        "--experiment",
        "syntax",
        "--condition",
        "grammarA",
        "--grammar-file",
        path(&grammar),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["grammar"].as_str().unwrap().contains("S1 T S0"));

    std::fs::write(&grammar, "start: S0\nS0 X\n").unwrap();
    let o = implang(&[
        "generate",
        "--experiment",
        "syntax",
        "--condition",
        "grammarA",
        "--grammar-file",
        path(&grammar),
    ]);
    assert_eq!(code(&o), 3);
}

#[test]
fn run_rescore_analyze_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path());
    let o = implang(&[
        "run",
        "--experiment",
        "morphosyntax",
        "--condition",
        "low-S1",
        "--learner",
        "baseline:exemplar",
        "--out",
        out,
        "--cell",
        "3",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let run_dir = dir.path().join("morphosyntax-low-S1-c3-r0");
    assert!(stdout(&o).starts_with("morphosyntax-low-S1-c3-r0\tCompleted"));
    for f in [
        "manifest.json",
        "config.json",
        "transcript.jsonl",
        "results.csv",
        "probes.csv",
        "metrics.json",
    ] {
        assert!(run_dir.join(f).is_file(), "{f}");
    }
    assert_eq!(
        std::fs::read_to_string(run_dir.join("transcript.jsonl"))
            .unwrap()
            .lines()
            .count(),
        214
    );

    let o = implang(&["rescore", path(&run_dir)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("prompts match\tmetrics match"));

    // A tampered reply changes the re-scored metrics.
    let transcript = std::fs::read_to_string(run_dir.join("transcript.jsonl")).unwrap();
    let tampered = transcript.replacen("\"content\":\"incorrect\"", "\"content\":\"correct\"", 1);
    assert_ne!(tampered, transcript);
    std::fs::write(run_dir.join("transcript.jsonl"), tampered).unwrap();
    assert_eq!(code(&implang(&["rescore", path(&run_dir)])), 2);
    std::fs::write(run_dir.join("transcript.jsonl"), transcript).unwrap();

    let o = implang(&["analyze", "--out", out]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).lines().count() > 1);
    let o = implang(&["report", "--out", out]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(dir.path().join("report.md").is_file() && dir.path().join("stats.csv").is_file());

    let empty = tempfile::tempdir().unwrap();
    let o = implang(&["report", "--out", path(empty.path())]);
    assert_eq!(code(&o), 0);
    assert!(
        !stdout(&o).contains("## "),
        "no completed runs, no sections"
    );
}

#[test]
fn learner_failure_exits_2_and_keeps_the_partial_transcript() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("script.json");
    std::fs::write(
        &script,
        r#"{"responses": ["I'm ready.", "yes"], "fail_after": 10}"#,
    )
    .unwrap();
    let learner = format!("scripted:{}", path(&script));
    let o = implang(&[
        "run",
        "--experiment",
        "syntax",
        "--condition",
        "grammarA",
        "--learner",
        &learner,
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    let run_dir = dir.path().join("syntax-grammarA-c0-r0");
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run_dir.join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["status"], "failed");
    assert_eq!(
        std::fs::read_to_string(run_dir.join("transcript.jsonl"))
            .unwrap()
            .lines()
            .count(),
        20
    );
    assert!(!run_dir.join("metrics.json").exists());
}

#[test]
fn suite_resumes_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "suite",
        "--experiment",
        "morphology",
        "--learner",
        "baseline:frequency",
        "--runs",
        "3",
        "--parallel",
        "2",
        "--out",
        path(dir.path()),
    ];
    let first = implang(&args);
    assert_eq!(code(&first), 0, "{}", stderr(&first));
    assert!(
        stdout(&first).starts_with("6 runs, 0 resumed, 0 failed"),
        "{}",
        stdout(&first)
    );
    let report = std::fs::read_to_string(dir.path().join("report.md")).unwrap();
    assert!(report.contains("| 0.6500 |") && report.contains("| 0.5170 |"));

    let second = implang(&args);
    assert!(
        stdout(&second).starts_with("6 runs, 6 resumed, 0 failed"),
        "{}",
        stdout(&second)
    );
    assert_eq!(
        std::fs::read_to_string(dir.path().join("report.md")).unwrap(),
        report
    );
}

#[test]
fn remote_run_against_a_mock_endpoint() {
    let server = MockServer::start(|_, r| {
        let body = r.json();
        let last = body["messages"].as_array().unwrap().last().unwrap()["content"]
            .as_str()
            .unwrap()
            .to_owned();
        let reply = match last
            .split("Where is my ")
            .nth(1)
            .and_then(|s| s.split('?').next())
        {
            Some(noun) => format!("You have some {noun}ka."),
            None => "I'm ready.".to_owned(),
        };
        (200, completion(&reply))
    });
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("remote.toml");
    std::fs::write(
        &config,
        format!(
            "[learner]\nendpoint = \"{}\"\napi_key_env = \"IMPLANG_CLI_TEST_KEY\"\nmodel_name = \"mock-1\"\n",
            server.url
        ),
    )
    .unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_implang"))
        .args([
            "run",
            "--experiment",
            "morphology",
            "--condition",
            "5R4E",
            "--learner",
            "remote",
            "--config",
            path(&config),
            "--out",
            path(dir.path()),
        ])
        .env("IMPLANG_CLI_TEST_KEY", "sk-cli")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let summary: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("morphology-5R4E-c0-r0/metrics.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(summary["learner"], "remote");
    assert_eq!(summary["metrics"]["parseable"], 12);
    assert_eq!(summary["metrics"]["regularization_rate"], 1.0);
    let requests = server.requests();
    assert_eq!(requests.len(), 16);
    assert_eq!(
        requests[15].json()["messages"].as_array().unwrap().len(),
        31
    );
    assert!(requests.iter().all(|r| r.json()["model"] == "mock-1"));
}
