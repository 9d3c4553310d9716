use std::path::Path;
use std::process::{Command, Output};

fn evacsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evacsim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

fn last_evacuated(exits: &str) -> f64 {
    let header: Vec<&str> = exits.lines().next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "evacuated").unwrap();
    let last = exits.lines().last().unwrap();
    last.split(',').nth(col).unwrap().parse().unwrap()
}

#[test]
fn run_micro_writes_every_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = evacsim(&[
        "run-micro",
        "--scenario",
        "test1a",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in [
        "trajectory.csv",
        "exits.csv",
        "congestion.csv",
        "manifest.json",
    ] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    assert_eq!(last_evacuated(&read(&out, "exits.csv")), 1.0);
    let manifest: serde_json::Value = serde_json::from_str(&read(&out, "manifest.json")).unwrap();
    assert_eq!(manifest["command"], "run-micro");
    assert_eq!(manifest["scale"], "micro");
    assert!(manifest["files"]["exits.csv"]
        .as_str()
        .unwrap()
        .starts_with("sha256:"));
}

#[test]
fn repeated_runs_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for d in [&a, &b] {
        let o = evacsim(&[
            "run-meso",
            "--scenario",
            "test1a",
            "--out",
            d.to_str().unwrap(),
            "--seed",
            "4",
            "--steps",
            "120",
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["trajectory.csv", "exits.csv", "congestion.csv"] {
        assert_eq!(read(&a, f), read(&b, f), "{f} differs");
    }
}

#[test]
fn metrics_reads_a_run_directory() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    let o = evacsim(&[
        "run-micro",
        "--scenario",
        "test2",
        "--out",
        run.to_str().unwrap(),
        "--steps",
        "200",
    ]);
    assert!(o.status.success());
    let o = evacsim(&["metrics", "--run", run.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = String::from_utf8(o.stdout).unwrap();
    assert!(table.starts_with("area,cong,m,l,M\n"));
    assert_eq!(table, read(&run, "metrics.csv"));
}

#[test]
fn optimize_writes_trace_and_schedule() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("opt");
    let o = evacsim(&[
        "optimize",
        "--scenario",
        "test1a",
        "--out",
        out.to_str().unwrap(),
        "--iters",
        "3",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let trace = read(&out, "trace.csv");
    assert_eq!(trace.lines().count(), 1 + 1 + 3);
    assert!(read(&out, "schedule.txt").starts_with("leader "));
}

#[test]
fn errors_are_reported_on_one_line() {
    let o = evacsim(&["validate", "--scenario", "/no/such/file.toml"]);
    assert!(!o.status.success());
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.starts_with("error: kind="), "{err}");
    assert_eq!(err.trim_end().lines().count(), 1);
}

#[test]
fn validate_accepts_bundled_scenarios() {
    for name in ["test1a", "test1b", "test2", "test3a", "test3b"] {
        let o = evacsim(&["validate", "--scenario", name]);
        assert!(o.status.success(), "{name}");
        let line = String::from_utf8(o.stdout).unwrap();
        assert!(line.starts_with(&format!("ok name={name} ")), "{line}");
    }
}

#[test]
fn invalid_scenario_values_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    let text = std::fs::read_to_string(
        Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/test1a.toml"),
    )
    .unwrap()
        + "\n[meso]\nbatch = 0\n";
    std::fs::write(&path, text).unwrap();
    let o = evacsim(&["validate", "--scenario", path.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8(o.stderr)
        .unwrap()
        .starts_with("error: kind="));
}
