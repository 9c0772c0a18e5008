use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hnnwalk"))
}

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn nf_reads_words_from_stdin() {
    let mut child = bin()
        .arg("nf")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(b"a b t^-1\nt b t^-1\na t t\nt b t\n\n")
        .unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    let lines: Vec<String> = stdout(&out).lines().map(String::from).collect();
    assert_eq!(lines[0], "a t^-1 a");
    assert_eq!(lines[1], "a");
    assert_eq!(lines[2], lines[3]);
    assert_eq!(lines[4], "e");
}

#[test]
fn nf_rejects_unknown_letters() {
    let mut child = bin()
        .arg("nf")
        .stdin(Stdio::piped())
        .stderr(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"a q\n").unwrap();
    let out = child.wait_with_output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).starts_with("ConfigError"));
}

#[test]
fn drift_on_recurrent_config_is_a_regime_error() {
    let c = config("degenerate_recurrent.json");
    let out = run(&["drift", "--config", c.to_str().unwrap(), "--steps", "100"]);
    assert_eq!(out.status.code(), Some(3));
    let err = stderr(&out);
    assert!(err.starts_with("RegimeError"), "{err}");
    assert!(err.contains("p = 1/2") && err.contains("recurrent"), "{err}");
}

#[test]
fn drift_json_is_byte_identical_across_reruns() {
    let c = config("klein_word.json");
    let args = ["drift", "--config", c.to_str().unwrap(), "--steps", "3000", "--replicas", "6"];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["command"], "drift");
    assert_eq!(v["config"]["steps"], 3000);
    assert_eq!(v["config_hash"].as_str().unwrap().len(), 64);
    assert!(v["result"]["lambda_direct"]["point"].as_f64().unwrap() > 0.0);

    let seeded = run(&["drift", "--config", c.to_str().unwrap(), "--steps", "3000", "--replicas", "6", "--seed", "99"]);
    assert_ne!(a.stdout, seeded.stdout);
}

#[test]
fn simulate_writes_csv_files() {
    let dir = tempfile::tempdir().unwrap();
    let c = config("klein_unit.json");
    let out = run(&[
        "simulate",
        "--config",
        c.to_str().unwrap(),
        "--steps",
        "2000",
        "--replicas",
        "3",
        "--out",
        dir.path().to_str().unwrap(),
        "--emit-cycles",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let traj = std::fs::read_to_string(dir.path().join("trajectories.csv")).unwrap();
    let mut lines = traj.lines();
    assert_eq!(lines.next(), Some("replica,n,t_length,word_length,ell_value"));
    assert_eq!(lines.count(), 3 * 101);
    let cycles = std::fs::read_to_string(dir.path().join("cycles.csv")).unwrap();
    assert!(cycles.starts_with("replica,i,duration,length_gain,syllable_count"));
    assert!(dir.path().join("summary.json").exists());
}

#[test]
fn emit_cycles_without_out_is_a_config_error() {
    let c = config("klein_unit.json");
    let out = run(&["simulate", "--config", c.to_str().unwrap(), "--steps", "10", "--emit-cycles"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_grid_is_a_grid_error() {
    let c = config("degenerate_p08.json");
    for grid in ["0.6:0.9", "0.9:0.6:0.1", "0.6:0.9:0"] {
        let out = run(&["sweep", "--config", c.to_str().unwrap(), "--param", "p", "--grid", grid]);
        assert_eq!(out.status.code(), Some(2), "{grid}");
        assert!(stderr(&out).starts_with("GridError"), "{grid}: {}", stderr(&out));
    }
}

#[test]
fn sweep_skips_the_recurrent_point() {
    let dir = tempfile::tempdir().unwrap();
    let c = config("degenerate_p08.json");
    let out = run(&[
        "sweep",
        "--config",
        c.to_str().unwrap(),
        "--param",
        "p",
        "--grid",
        "0.4:0.6:0.1",
        "--steps",
        "500",
        "--replicas",
        "4",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("sweep.json")).unwrap()).unwrap();
    assert_eq!(v["result"]["excluded"].as_array().unwrap().len(), 1);
    assert_eq!(v["result"]["points"].as_array().unwrap().len(), 2);
    assert!(dir.path().join("sweep.csv").exists());
}

#[test]
fn missing_config_is_an_io_error() {
    let out = run(&["drift", "--config", "/nonexistent/config.json"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(stderr(&out).starts_with("IoError"));
}

#[test]
fn bad_schema_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    std::fs::write(&path, r#"{"alpha": 0.5}"#).unwrap();
    let out = run(&["drift", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).starts_with("ConfigError"));
}

#[test]
fn zcheck_reports_the_lazy_identity() {
    let out = run(&["zcheck", "--alpha", "0.5", "--p", "0.8", "--z", "1"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["result"]["lazy_green"].as_f64().unwrap() - 10.0 / 3.0).abs() < 1e-9);
    assert!((v["result"]["u"].as_f64().unwrap() - 0.4).abs() < 1e-12);
    let bad = run(&["zcheck", "--alpha", "0.5", "--p", "0.5"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn xi_runs_on_a_short_schedule() {
    let c = config("klein_word.json");
    let out = run(&[
        "xi",
        "--config",
        c.to_str().unwrap(),
        "--horizon-schedule",
        "16,x3",
        "--trials",
        "200",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["result"]["entries"].as_array().unwrap().len(), 4);
    let bad = run(&["xi", "--config", c.to_str().unwrap(), "--horizon-schedule", "16x3"]);
    assert_eq!(bad.status.code(), Some(2));
}
