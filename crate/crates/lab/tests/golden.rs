//! Byte-for-byte comparison against checked-in outputs of a small run.
//! Set `UPDATE_GOLDEN=1` to regenerate them after an intended change.

use std::path::{Path, PathBuf};
use std::process::Command;

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn lab(args: &[&str]) {
    let out = Command::new(env!("CARGO_BIN_EXE_cashflow-lab")).args(args).output().unwrap();
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn small_run_matches_golden_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let out_s = out.to_str().unwrap();
    let scenario = golden_dir().join("scenario.json");
    lab(&["simulate", "--scenario", scenario.to_str().unwrap(), "--out", out_s]);
    lab(&["analyze", "--out", out_s]);
    lab(&["report", "--out", out_s]);

    let files = [
        ("ledger.csv", "ledger.csv"),
        ("report.json", "report.json"),
        ("days/day_04/partition.csv", "partition.csv"),
    ];
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    for (produced, golden) in files {
        let got = std::fs::read(out.join(produced)).unwrap();
        let path = golden_dir().join(golden);
        if update {
            std::fs::write(&path, &got).unwrap();
            continue;
        }
        let want = std::fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert!(got == want, "{produced} differs from {}", path.display());
    }
}
