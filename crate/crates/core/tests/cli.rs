// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cast_retrieval::harness::SelectionTrace;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn cast(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cast"))
        .args(args)
        .env_remove("CAST_SEED")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = cast(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

struct Fixture {
    dir: tempfile::TempDir,
    index: PathBuf,
}

fn fixture() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let index = dir.path().join("desk.idx");
    let out = cast(&["index", "build", p(&data("desk_corpus.jsonl")), "-o", p(&index)]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("indexed 200 exemplars"));
    Fixture { dir, index }
}

#[test]
fn select_then_prompt() {
    let f = fixture();
    let query = f.dir.path().join("q.expr");
    std::fs::write(&query, "fn inc(a) {\n    let b = a + 1;\n    return b;\n}\n").unwrap();
    let trace_path = f.dir.path().join("t.json");
    ok(&[
        "select",
        "--index",
        p(&f.index),
        "--query",
        p(&query),
        "-k",
        "3",
        "--trace",
        p(&trace_path),
    ]);
    let trace = SelectionTrace::load(&trace_path).unwrap();
    assert_eq!(trace.selected_ids.len(), 3);
    assert_eq!(trace.query.id, "q");
    assert_eq!(trace.config.seed, 42);
    assert!(trace.timing_ms.is_none());

    let prompt = ok(&["prompt", "--selection", p(&trace_path), "--index", p(&f.index)]);
    assert!(prompt.starts_with("Translate the following expr code into py.\n"));
    assert!(prompt.ends_with("### Target (py)\n```py\n"));
    assert_eq!(prompt.matches("### Source (expr)").count(), 4);

    let reversed = ok(&[
        "prompt",
        "--selection",
        p(&trace_path),
        "--index",
        p(&f.index),
        "--order",
        "reversed",
    ]);
    assert_ne!(prompt, reversed);
    assert_eq!(prompt.len(), reversed.len());

    let template = f.dir.path().join("t.toml");
    std::fs::write(
        &template,
        "header = \"\"\nexemplar = \"{source}\\n=>\\n{target}\\n\\n\"\nquery = \"{source}\\n=>\\n\"\n",
    )
    .unwrap();
    let custom = ok(&[
        "prompt",
        "--selection",
        p(&trace_path),
        "--index",
        p(&f.index),
        "--template",
        p(&template),
    ]);
    assert_eq!(custom.matches("=>").count(), 4);
}

#[test]
fn timing_only_on_request() {
    let f = fixture();
    let query = f.dir.path().join("q.json");
    let first = std::fs::read_to_string(data("desk_queries.jsonl")).unwrap();
    std::fs::write(&query, first.lines().next().unwrap()).unwrap();
    let out = ok(&[
        "select",
        "--index",
        p(&f.index),
        "--query",
        p(&query),
        "--strategy",
        "cast_a",
        "--timing",
    ]);
    let trace: SelectionTrace = serde_json::from_str(&out).unwrap();
    assert!(trace.timing_ms.is_some());
    assert!(trace.threshold_met.is_some());
    assert!(trace.selected_ids.len() <= 20);
    assert_eq!(trace.query.id, "q0000");
}

#[test]
fn seed_controls_random_strategy() {
    let f = fixture();
    let query = f.dir.path().join("q.expr");
    std::fs::write(&query, "fn f(x) {\n    return x;\n}\n").unwrap();
    let run = |seed: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_cast"))
            .args([
                "select",
                "--index",
                p(&f.index),
                "--query",
                p(&query),
                "--strategy",
                "random",
                "-k",
                "8",
            ])
            .env("CAST_SEED", seed)
            .output()
            .unwrap();
        assert!(out.status.success());
        out.stdout
    };
    assert_eq!(run("5"), run("5"));
    assert_ne!(run("5"), run("6"));
}

#[test]
fn bench_writes_csv_and_plot() {
    let f = fixture();
    let csv = f.dir.path().join("c.csv");
    let svg = f.dir.path().join("c.svg");
    ok(&[
        "bench",
        "coverage",
        "--index",
        p(&f.index),
        "--queries",
        p(&data("desk_queries.jsonl")),
        "--strategies",
        "cast_f,ld",
        "--shots",
        "1,3",
        "--csv",
        p(&csv),
        "--plot",
        p(&svg),
    ]);
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "strategy,shot,mean_cast,mean_shots");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("cast_f,1,"));
    assert!(std::fs::read_to_string(&svg).unwrap().contains("<polyline"));
}

#[test]
fn exact_match_command() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.py");
    let b = dir.path().join("b.py");
    std::fs::write(&a, "x = 1   \n\n").unwrap();
    std::fs::write(&b, "x = 1").unwrap();
    assert_eq!(ok(&["em", "--pred", p(&a), "--gold", p(&b)]), "true\n");
    std::fs::write(&b, "y = 1").unwrap();
    assert_eq!(ok(&["em", "--pred", p(&a), "--gold", p(&b)]), "false\n");
}

#[test]
fn input_errors_exit_with_2() {
    let f = fixture();
    let query = f.dir.path().join("q.expr");
    std::fs::write(&query, "fn f(x) { return x; }").unwrap();
    let (queries, vectors) = (data("desk_queries.jsonl"), data("fingerprint_vectors.tsv"));
    let cases: Vec<Vec<&str>> = vec![
        vec!["select", "--index", "/nonexistent/idx", "--query", p(&query)],
        vec![
            "select",
            "--index",
            p(&f.index),
            "--query",
            p(&query),
            "--strategy",
            "bogus",
        ],
        vec!["select", "--index", p(&f.index), "--query", p(&query), "-k", "500"],
        vec![
            "select",
            "--index",
            p(&f.index),
            "--query",
            p(&query),
            "--strategy",
            "embed",
        ],
        vec![
            "select",
            "--index",
            p(&f.index),
            "--query",
            p(&query),
            "--fixed-ids",
            "nope",
        ],
        vec![
            "bench",
            "coverage",
            "--index",
            p(&f.index),
            "--queries",
            p(&queries),
            "--shots",
            "3,1",
        ],
        vec!["index", "build", p(&vectors), "-o", "/dev/null"],
        vec!["frobnicate"],
    ];
    for args in cases {
        let out = cast(&args);
        assert_eq!(
            out.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    std::fs::write(&query, "fn f(x) { return x +; }").unwrap();
    let out = cast(&["select", "--index", p(&f.index), "--query", p(&query)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("at byte 20"));
}

#[test]
fn corrupt_index_is_rejected() {
    let f = fixture();
    let mut bytes = std::fs::read(&f.index).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0xff;
    bytes.truncate(bytes.len() - 3);
    let bad = f.dir.path().join("bad.idx");
    std::fs::write(&bad, bytes).unwrap();
    let query = f.dir.path().join("q.expr");
    std::fs::write(&query, "fn f(x) { return x; }").unwrap();
    let out = cast(&["select", "--index", p(&bad), "--query", p(&query)]);
    assert_eq!(out.status.code(), Some(2));
}
