use std::fs;
use std::process::{Command, Output};

fn cpbox(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cpbox")).args(args).output().expect("cpbox runs")
}

#[test]
fn lists_builtins() {
    let out = cpbox(&["--list-builtins"]);
    assert!(out.status.success());
    let names: Vec<String> = String::from_utf8(out.stdout).unwrap().lines().map(String::from).collect();
    for want in ["fig2a", "fig2b", "fig2c", "fig3a", "fig3b", "fig4a", "fig4b", "fig5", "fig5a", "fig5b"] {
        assert!(names.iter().any(|n| n == want), "missing {want}");
    }
}

#[test]
fn csv_run_writes_series_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("nested/f2");
    let out = cpbox(&["run", "fig2a", "--samples", "21", "--t-max", "2", "--out", prefix.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let inv = fs::read_to_string(dir.path().join("nested/f2_base_inversion.csv")).unwrap();
    let mut lines = inv.lines();
    assert_eq!(lines.next(), Some("lambda_t,inversion"));
    assert_eq!(lines.count(), 21);
    assert!(dir.path().join("nested/f2_base_tangle.csv").is_file());

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("nested/f2_manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["fock_dim"], 95);
    assert_eq!(manifest["scenario"]["times"]["samples"], 21);
    assert!(manifest["variants"][0]["kraus"]["truncation_k"].is_u64());
    assert!(manifest["variants"][0]["invariants"]["trace_defect"].as_f64().unwrap() < 1e-10);
}

#[test]
fn json_run_writes_one_file() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("w");
    let out = cpbox(&["run", "fig5b", "--format", "json", "--out", prefix.to_str().unwrap()]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("w.json")).unwrap()).unwrap();
    assert_eq!(v["wigner"][0]["grid"]["grid"]["nx"], 201);
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn check_mode_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("c");
    let out = cpbox(&["run", "fig3b", "--check", "--samples", "20", "--out", prefix.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("trace defect"));
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn scenario_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mine.toml");
    fs::write(
        &path,
        r#"
version = 1
name = "mine"
observables = ["inversion", "mutual_information"]

[model]
gamma = 0.02

[qubit]
kind = "pure_superposition"
theta = 1.0

[field]
kind = "fock"
n = 3

[times]
t_max = 4.0
samples = 9
"#,
    )
    .unwrap();
    let prefix = dir.path().join("out");
    let out = cpbox(&["run", path.to_str().unwrap(), "--out", prefix.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("out_base_mutual_information.csv").is_file());
}

#[test]
fn validation_failures_exit_2() {
    assert_eq!(cpbox(&["run", "fig2a", "--samples", "1", "--check"]).status.code(), Some(2));
    assert_eq!(cpbox(&["run", "no-such-scenario"]).status.code(), Some(2));
    // far too small for n̄ = 25
    let out = cpbox(&["run", "fig2a", "--dim", "10", "--check"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("truncation"));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.toml");
    let text = "version = 1\nname = \"e\"\nobservables = []\n[model]\n[qubit]\nkind = \"mixed_diagonal\"\ntheta = 0.0\n[field]\nkind = \"fock\"\nn = 0\n[times]\nt_max = 1.0\nsamples = 3\n";
    fs::write(&path, text).unwrap();
    let out = cpbox(&["run", path.to_str().unwrap(), "--out", dir.path().join("x").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn numerical_failures_exit_3() {
    // tangle needs the Kraus series, which gives up for γ t E² this large
    let out = cpbox(&["run", "fig2c", "--t-max", "100000", "--samples", "2", "--check"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn unwritable_output_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let prefix = blocker.join("sub/out");
    let out = cpbox(&["run", "fig5b", "--out", prefix.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("file"));
}
