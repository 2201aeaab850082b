mod common;

use std::process::Command;

use common::data;

fn taletailor(args: &[&str]) -> (bool, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_taletailor"))
        .args(args)
        .output()
        .unwrap();
    (
        out.status.success(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn p(path: &std::path::Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn ingest_reproduces_golden_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("extracts.jsonl");
    let freq = dir.path().join("frequent.txt");
    let (ok, _, err) = taletailor(&[
        "ingest",
        "--src",
        p(&data("gutenberg")),
        "--format",
        "gutenberg",
        "--out",
        p(&out),
        "--offensive",
        p(&data("offensive.txt")),
        "--extract-tokens",
        "40",
        "--frequent-out",
        p(&freq),
    ]);
    assert!(ok, "{err}");
    assert_eq!(
        std::fs::read(&out).unwrap(),
        std::fs::read(data("golden/extracts.jsonl")).unwrap()
    );
    assert_eq!(
        std::fs::read(&freq).unwrap(),
        std::fs::read(data("golden/frequent_words.txt")).unwrap()
    );

    let (ok, stats, err) = taletailor(&["stats", "--in", p(&out)]);
    assert!(ok, "{err}");
    assert_eq!(stats, std::fs::read_to_string(data("golden/stats.tsv")).unwrap());
}

#[test]
fn index_then_retrieve() {
    let dir = tempfile::tempdir().unwrap();
    let idx = dir.path().join("images.ttix");
    let (ok, _, err) = taletailor(&[
        "index",
        "--captions",
        p(&data("images/captions.tsv")),
        "--out",
        p(&idx),
        "--dim",
        "128",
    ]);
    assert!(ok, "{err}");
    let (ok, out, err) = taletailor(&[
        "retrieve",
        "--index",
        p(&idx),
        "--query",
        "wise owl under a full moon",
        "--k",
        "3",
        "--attribution",
        p(&data("images/attribution.tsv")),
    ]);
    assert!(ok, "{err}");
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("1\timg053\t"), "{out}");
    assert!(lines[0].ends_with("CC BY 4.0"));
}

#[test]
fn rank_prints_features() {
    let dir = tempfile::tempdir().unwrap();
    let cands = dir.path().join("cands.txt");
    std::fs::write(
        &cands,
        "The happy king sang.\n\nThe dark the the the.\nThe kind queen went home and was happy.\n",
    )
    .unwrap();
    let (ok, out, err) = taletailor(&["rank", "--in", p(&cands), "--ctx", p(&data("ctx"))]);
    assert!(ok, "{err}");
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(
        lines[0],
        "rank\ttotal\treadability\tpositivity\tdiversity\tsimplicity\tcoherency\ttale_like\ttext"
    );
    assert!(lines[1].starts_with("1\t"));
    assert_eq!(lines[1].split('\t').count(), 9);
}

#[test]
fn usage_errors_fail() {
    let (ok, _, _) = taletailor(&["ingest", "--src", "x", "--format", "epub", "--out", "y"]);
    assert!(!ok);
    let (ok, _, err) = taletailor(&["stats", "--in", "/nonexistent/file.jsonl"]);
    assert!(!ok);
    assert!(err.contains("error"));
}
