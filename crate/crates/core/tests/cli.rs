use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use vlc_precoding::csv_out::Table;
use vlc_precoding::precoder::PrecodingMatrix;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_vlc-precoding"))
}

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn convergence_writes_trace_precoder_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("conv.csv");
    let o = run(&["convergence", "--config", s(&config("convergence.json")), "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let trace = Table::parse(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(trace.header, vec!["iteration", "objective"]);
    let raw = PrecodingMatrix::parse_csv(&std::fs::read_to_string(dir.path().join("conv_precoder.csv")).unwrap()).unwrap();
    assert_eq!(raw.shape(), (9, 10));
    assert!(PrecodingMatrix::from_matrix(raw).is_ok());

    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("conv.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["kind"], "convergence");
    assert_eq!(meta["seed"], 7);
    assert_eq!(meta["rate_units"], "bits");
    assert_eq!(meta["config"]["q"], 10);
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("convergence.json");
    let paths: Vec<PathBuf> = ["a.csv", "b.csv", "c.csv"].iter().map(|n| dir.path().join(n)).collect();
    assert!(run(&["convergence", "--config", s(&cfg), "--out", s(&paths[0]), "--seed", "99"]).status.success());
    assert!(run(&["convergence", "--config", s(&cfg), "--out", s(&paths[1]), "--seed", "99"]).status.success());
    assert!(run(&["convergence", "--config", s(&cfg), "--out", s(&paths[2]), "--seed", "100"]).status.success());
    let read = |p: &PathBuf| std::fs::read(p).unwrap();
    assert_eq!(read(&paths[0]), read(&paths[1]));
    assert_ne!(read(&paths[0]), read(&paths[2]));
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("a.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 99);
    assert_eq!(meta["config"]["seed"], 99);
}

#[test]
fn power_map_csv_layout() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("map.csv");
    assert!(run(&["power-map", "--config", s(&config("power_map.json")), "--out", s(&out)]).status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,y,power"));
    let last = text.lines().last().unwrap();
    assert!(last.starts_with("# armp="));
    let table = Table::parse(&text).unwrap();
    assert_eq!(table.rows.len(), 51 * 61);
    let armp: f64 = last.trim_start_matches("# armp=").parse().unwrap();
    let mean = table.column("power").unwrap().iter().sum::<f64>() / table.rows.len() as f64;
    assert!((armp - mean / 16.0).abs() <= 1e-12 * armp);
}

#[test]
fn ber_and_sweep_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ber.csv");
    assert!(run(&["ber", "--config", s(&config("ber.json")), "--out", s(&out)]).status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("delta_sq,ber_proposed,ber_classical\n"));
    assert!(dir.path().join("ber_users.csv").exists());

    let out = dir.path().join("sweep.csv");
    assert!(run(&["sweep", "--config", s(&config("spacing_sweep_high.json")), "--out", s(&out)]).status.success());
    let t = Table::parse(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(t.header, vec!["m_t", "value", "armp_proposed", "armp_classical", "iterations", "converged"]);
    assert_eq!(t.rows.len(), 15);
}

#[test]
fn failures_report_category_and_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{ "schema_version": 1, "kind": "convergence", "room": {}, "array": { "d_x": -1 } }"#).unwrap();
    let o = run(&["convergence", "--config", s(&bad), "--out", s(&dir.path().join("x.csv"))]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.starts_with("error[config-validation]"), "{err}");
    assert!(err.contains("array.d_x"));

    std::fs::write(&bad, "{ \"schema_version\": 1,\n \"kind\": \"nope\" }").unwrap();
    let o = run(&["convergence", "--config", s(&bad), "--out", "x.csv"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error[config-parse]"));

    // Subcommand and config kind disagree.
    let o = run(&["ber", "--config", s(&config("convergence.json")), "--out", s(&dir.path().join("y.csv"))]);
    assert_eq!(o.status.code(), Some(2));

    let o = run(&["sweep", "--config", s(&dir.path().join("missing.json")), "--out", "z.csv"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error[io]"));

    let o = run(&["convergence", "--config", s(&config("convergence.json"))]);
    assert_eq!(o.status.code(), Some(2));
}
