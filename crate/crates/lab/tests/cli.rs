use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cashflow_lab::formats::{ledger_bytes, read_json, read_ledger};

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cashflow-lab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) {
    let out = lab(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn scenario(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const NO_AGENTS: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenarios/no_agents.json");

const MONTH: &str = r#"{
  "schema_version": 1,
  "registration": { "final_count": 30 },
  "agent_mix": [
    { "kind": "zero_intelligence", "fraction": 0.8, "params": { "waiting": { "fixed": { "seconds": 3600 } } } },
    { "kind": "inactive", "fraction": 0.2 }
  ],
  "agent_inventory": 10,
  "rng_seed": 5
}"#;

#[test]
fn scenario_without_agents_produces_an_empty_ledger() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    ok(&["simulate", "--scenario", NO_AGENTS, "--out", s(&out)]);
    let text = std::fs::read_to_string(out.join("ledger.csv")).unwrap();
    assert_eq!(text, "time,day,contract,price,volume,buyer,seller\n");
    ok(&["analyze", "--out", s(&out)]);
    let summary = read_json(&out.join("days/day_02/summary.json")).unwrap();
    assert_eq!(summary["active_nodes"], 0);
    let market = read_json(&out.join("market.json")).unwrap();
    assert_eq!(market["transactions"], 0);
}

#[test]
fn invalid_scenarios_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        r#"{"schema_version": 2}"#,
        r#"{"schema_version": 1, "duration_days": 0}"#,
        r#"{"schema_version": 1, "agent_mix": [{"kind": "zero_intelligence", "fraction": 0.5}]}"#,
        r#"{"schema_version": 1, "surprise": true}"#,
        "not json",
    ];
    for (i, body) in cases.iter().enumerate() {
        let path = scenario(dir.path(), &format!("bad{i}.json"), body);
        let out = lab(&["simulate", "--scenario", s(&path), "--out", s(&dir.path().join("out"))]);
        assert!(!out.status.success(), "{body} was accepted");
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    }
    assert!(!dir.path().join("out/ledger.csv").exists());

    let missing = lab(&["analyze", "--out", s(&dir.path().join("nowhere"))]);
    assert!(!missing.status.success());
}

#[test]
fn partition_of_complete_bipartite_edges() {
    let dir = tempfile::tempdir().unwrap();
    let mut edges = String::from("i,j,w\n");
    for a in 1..=4 {
        for b in 5..=8 {
            edges.push_str(&format!("{a},{b},1.00\n"));
        }
    }
    let path = scenario(dir.path(), "k44.csv", &edges);
    let out = dir.path().join("k44");
    ok(&["partition", "--edges", s(&path), "--out", s(&out)]);
    let summary = read_json(&out.join("partition.json")).unwrap();
    assert!((summary["modularity"].as_f64().unwrap() + 0.5).abs() < 1e-12);
    assert_eq!(summary["sizes"], serde_json::json!([4, 4]));
    let csv = std::fs::read_to_string(out.join("partition.csv")).unwrap();
    assert_eq!(csv, "node,community\n1,0\n2,0\n3,0\n4,0\n5,1\n6,1\n7,1\n8,1\n");
}

#[test]
fn partition_of_a_single_edge() {
    let dir = tempfile::tempdir().unwrap();
    let path = scenario(dir.path(), "edge.csv", "i,j,w\n3,9,12.50\n");
    let out = dir.path().join("edge");
    ok(&["partition", "--edges", s(&path), "--out", s(&out)]);
    let summary = read_json(&out.join("partition.json")).unwrap();
    assert_eq!(summary["nodes"], 2);
    assert_eq!(summary["edges"], 1);
    assert!((summary["modularity"].as_f64().unwrap() + 0.5).abs() < 1e-12);
}

#[test]
fn partition_requires_an_input() {
    let dir = tempfile::tempdir().unwrap();
    let out = lab(&["partition", "--out", s(dir.path())]);
    assert!(!out.status.success());
}

#[test]
fn month_long_run_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let path = scenario(dir.path(), "month.json", MONTH);
    let out = dir.path().join("run");
    ok(&["simulate", "--scenario", s(&path), "--out", s(&out)]);
    ok(&["analyze", "--out", s(&out)]);

    let days: Vec<_> = std::fs::read_dir(out.join("days")).unwrap().collect();
    assert_eq!(days.len(), 30);

    ok(&["report", "--out", s(&out)]);
    let first = std::fs::read(out.join("report.json")).unwrap();
    ok(&["report", "--out", s(&out)]);
    assert_eq!(first, std::fs::read(out.join("report.json")).unwrap());
    let report = read_json(&out.join("report.json")).unwrap();
    assert_eq!(report["final_day"], 30);
    assert_eq!(report["exponents"].as_object().unwrap().len(), 10);

    let manifest = read_json(&out.join("manifest.json")).unwrap();
    for cmd in ["simulate", "analyze", "report"] {
        assert_eq!(manifest["commands"][cmd]["status"], "complete");
    }
}

#[test]
fn ledger_round_trip_gives_identical_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let path = scenario(dir.path(), "month.json", MONTH);
    let a = dir.path().join("a");
    ok(&["simulate", "--scenario", s(&path), "--out", s(&a)]);

    let records = read_ledger(&a.join("ledger.csv")).unwrap();
    let original = std::fs::read(a.join("ledger.csv")).unwrap();
    assert_eq!(ledger_bytes(&records), original);

    let b = dir.path().join("b");
    std::fs::create_dir_all(&b).unwrap();
    std::fs::write(b.join("copy.csv"), &original).unwrap();
    ok(&["analyze", "--days", "12..14", "--out", s(&a)]);
    ok(&[
        "analyze",
        "--ledger",
        s(&b.join("copy.csv")),
        "--registrations",
        s(&a.join("registrations.csv")),
        "--scenario",
        s(&a.join("scenario.json")),
        "--days",
        "12..14",
        "--out",
        s(&b),
    ]);
    for day in 12..=14 {
        let rel = format!("days/day_{day:02}/snapshot.csv");
        assert_eq!(std::fs::read(a.join(&rel)).unwrap(), std::fs::read(b.join(&rel)).unwrap());
    }
}

#[test]
fn day_without_trades_leaves_every_registrant_isolated() {
    let dir = tempfile::tempdir().unwrap();
    let ledger = scenario(
        dir.path(),
        "ledger.csv",
        "time,day,contract,price,volume,buyer,seller\n86400,2,1,35.50,3,1,2\n90000,2,2,12.00,1,3,1\n",
    );
    let regs = scenario(dir.path(), "registrations.csv", "player,day\n1,1\n2,1\n3,1\n4,2\n");
    let out = dir.path().join("run");
    ok(&["analyze", "--ledger", s(&ledger), "--registrations", s(&regs), "--out", s(&out)]);
    let day1 = read_json(&out.join("days/day_01/summary.json")).unwrap();
    assert_eq!(day1["nodes"], 3);
    assert_eq!(day1["active_nodes"], 0);
    assert_eq!(day1["isolated_fraction"], 1.0);
    let day2 = read_json(&out.join("days/day_02/summary.json")).unwrap();
    assert_eq!(day2["nodes"], 4);
    assert_eq!(day2["active_nodes"], 3);
    let snapshot = std::fs::read_to_string(out.join("days/day_02/snapshot.csv")).unwrap();
    assert_eq!(snapshot, "i,j,w\n1,2,106.50\n3,1,12.00\n");
}

#[test]
fn day_out_of_range_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    ok(&["simulate", "--scenario", NO_AGENTS, "--out", s(&out)]);
    assert!(!lab(&["analyze", "--days", "1..3", "--out", s(&out)]).status.success());
    assert!(!lab(&["partition", "--ledger", s(&out.join("ledger.csv")), "--day", "0", "--out", s(&out)])
        .status
        .success());
}
