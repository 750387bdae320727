//! End-to-end checks of the binary: pipeline plumbing, determinism of the
//! emitted artifacts, and the documented exit codes.

use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_edgeslice"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

#[test]
fn generate_solve_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &[
            "generate", "--seed", "5", "--devices", "10", "--slices", "2", "--out", "scen.json",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let solve = run(
        &["solve", "--scenario", "scen.json", "--policy", "optimal"],
        dir.path(),
    );
    assert!(solve.status.success());
    let text = String::from_utf8(solve.stdout).unwrap();
    assert!(text.contains("system_cost:"));
    assert!(text.contains("iterations:"));
}

#[test]
fn generate_is_deterministic_across_invocations() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.json", "b.json"] {
        let out = run(&["generate", "--seed", "11", "--out", name], dir.path());
        assert!(out.status.success());
    }
    let a = std::fs::read(dir.path().join("a.json")).unwrap();
    let b = std::fs::read(dir.path().join("b.json")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn sweep_writes_rows_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("cfg.json"),
        r#"{"n_list":[5],"s_list":[1],"repetitions":1,"seed_base":3}"#,
    )
    .unwrap();
    let out = run(
        &["sweep", "--config", "cfg.json", "--out", "rows.csv"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("rows.csv")).unwrap();
    assert!(csv.starts_with("seed,N,S,policy,system_cost,pg,iterations,"));
    assert_eq!(csv.lines().count(), 4); // header + 3 policies
    assert!(dir.path().join("rows.csv.meta.json").exists());
}

#[test]
fn bad_config_exits_with_code_1() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.json"), r#"{"n_list": []}"#).unwrap();
    let out = run(&["sweep", "--config", "bad.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n_list"));
}

#[test]
fn unwritable_output_exits_with_code_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &["generate", "--seed", "1", "--out", "no/such/dir/x.json"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn verify_passes_on_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["verify", "--seed", "4"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 5);
    assert_eq!(text.lines().filter(|l| l.starts_with("FAIL")).count(), 0);
}
