use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn mirg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mirg"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("spawn mirg")
}

fn ok(args: &[&str]) -> String {
    let out = mirg(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_degrees_and_estimators_chain() {
    let dir = tempfile::tempdir().unwrap();
    let edges = dir.path().join("edges.tsv");
    let deg = dir.path().join("deg.csv");
    let deg2 = dir.path().join("deg2.csv");
    ok(&[
        "generate", "--n", "2000", "--seed", "3", "--alpha", "1.5",
        "--layers", "multi:cap_one,single:odds",
        "--out", s(&edges), "--degrees-out", s(&deg),
    ]);
    assert!(fs::metadata(&edges).unwrap().len() > 0);

    ok(&[
        "degrees", "--edges", s(&edges), "--n", "2000",
        "--layers", "multi:cap_one,single:odds", "--out", s(&deg2),
    ]);
    assert_eq!(fs::read(&deg).unwrap(), fs::read(&deg2).unwrap());

    let hill = ok(&["hill", "--input", s(&deg), "--k", "10,50,100"]);
    let lines: Vec<&str> = hill.lines().collect();
    assert_eq!(lines.len(), 4, "{hill}");
    for l in &lines[1..] {
        assert!(l.split(',').count() >= 2);
    }

    let hillish = ok(&["hillish", "--input", s(&deg), "--k-max", "30"]);
    assert_eq!(hillish.lines().count(), 31);
}

#[test]
fn generate_is_reproducible_by_seed() {
    let a = ok(&["generate", "--n", "500", "--seed", "7"]);
    let b = ok(&["generate", "--n", "500", "--seed", "7"]);
    let c = ok(&["generate", "--n", "500", "--seed", "8"]);
    assert_eq!(a, b);
    assert_ne!(a, c);
    let naive = ok(&["generate", "--n", "200", "--seed", "7", "--naive"]);
    assert!(!naive.is_empty());
}

#[test]
fn experiment_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("lemma");
    let stdout = ok(&[
        "experiment", "lemma_degree", "--n", "50", "--replicates", "300",
        "--out", s(&out),
    ]);
    assert!(stdout.contains("max |diff|"), "{stdout}");
    assert!(out.join("lemma_pmf.csv").exists());
    assert!(out.join("lemma_summary.csv").exists());

    let cfg = dir.path().join("t1.toml");
    fs::write(
        &cfg,
        "experiment = \"table1\"\nn = 2000\nreplicates = 4\nalpha = [1.5]\nk_list = [20, 100]\n",
    )
    .unwrap();
    let out = dir.path().join("t1");
    ok(&["experiment", "table1", "--config", s(&cfg), "--out", s(&out)]);
    let csv = fs::read_to_string(out.join("table1.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3, "{csv}");
}

#[test]
fn verify_checks_pass() {
    for check in ["coupling", "moments", "pb3"] {
        let out = ok(&["verify", check, "--samples", "20000"]);
        assert!(out.lines().count() > 1, "{check}");
    }
}

#[test]
fn errors_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.csv");

    let out = mirg(&["hill", "--input", s(&missing), "--k", "5"]);
    assert_eq!(out.status.code(), Some(6));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error (io)"));

    let out = mirg(&["generate", "--n", "100", "--alpha", "-1"]);
    assert_eq!(out.status.code(), Some(2));

    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "node,d1,d2\n0,1,x\n").unwrap();
    let out = mirg(&["hill", "--input", s(&bad), "--k", "1"]);
    assert_eq!(out.status.code(), Some(3));

    let out = mirg(&["experiment", "nonsense"]);
    assert!(!out.status.success());
}
