use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn run(command: &str, config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_starsync"))
        .args([command, "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn report(out: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

#[test]
fn modes_lists_tagged_frequencies() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("modes", &config("uniform_n2.toml"), dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = csv_rows(&dir.path().join("modes.csv"));
    let tag = header.iter().position(|h| h == "tag").unwrap();
    let freq = header.iter().position(|h| h == "exact_freq").unwrap();
    let expected = [(1.0, "leaking-"), (2f64.sqrt(), "protected"), (2.0, "leaking+")];
    assert_eq!(rows.len(), 3);
    for (row, (w, t)) in rows.iter().zip(expected) {
        assert_eq!(row[tag], t);
        assert!((row[freq].parse::<f64>().unwrap() - w).abs() < 1e-12);
    }
    let r = report(dir.path());
    assert_eq!(r["status"], "ok");
    assert_eq!(r["exit_code"], 0);
    assert!((r["results"]["xi"].as_f64().unwrap()).abs() < 1e-15);
}

#[test]
fn sweep_gap_narrows_at_strong_coupling() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("sweep", &config("benchmark_sweep.toml"), dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = csv_rows(&dir.path().join("sweep.csv"));
    let g = header.iter().position(|h| h == "g").unwrap();
    let gap = header.iter().position(|h| h == "spread_exact").unwrap();
    let tail: Vec<f64> = rows
        .iter()
        .filter(|r| r[g].parse::<f64>().unwrap() >= 10.0)
        .map(|r| r[gap].parse().unwrap())
        .collect();
    assert!(tail.len() > 10);
    assert!(tail.windows(2).all(|w| w[1] < w[0]));
    let fit = &report(dir.path())["results"]["fit_exact"];
    assert!((fit["exponent"].as_f64().unwrap() + 0.5).abs() < 0.1);
}

#[test]
fn missing_field_is_a_parameter_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[network]\nmass = 1.0\ncouplings = [1.0, 1.0]\n").unwrap();
    let out = dir.path().join("out");
    let o = run("modes", &cfg, &out);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("hooke"));
    let r = report(&out);
    assert_eq!(r["error"]["code"], "config");
    assert!(r["error"]["message"].as_str().unwrap().contains("hooke"));
}

#[test]
fn invalid_value_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[network]\nmass = 1.0\nhooke = [1.0, -2.0, 1.0]\ncouplings = [1.0, 1.0]\n").unwrap();
    let o = run("modes", &cfg, dir.path());
    assert_eq!(o.status.code(), Some(1));
    let r = report(dir.path());
    assert_eq!(r["error"]["code"], "parameter");
    assert!(r["error"]["message"].as_str().unwrap().contains("network.hooke[1]"));
}

#[test]
fn oversized_oracle_is_a_resource_error() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(config("oracle.toml")).unwrap().replace("cutoff = 8", "cutoff = 30");
    let cfg = dir.path().join("big.toml");
    std::fs::write(&cfg, text).unwrap();
    let o = run("oracle", &cfg, dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(report(dir.path())["error"]["code"], "resource");
}

#[test]
fn repeated_runs_are_byte_identical() {
    for (command, cfg, artifact) in [
        ("sweep", "benchmark_sweep.toml", "sweep.csv"),
        ("evolve", "sync.toml", "trajectory.csv"),
        ("modes", "uniform_n2.toml", "modes.csv"),
    ] {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        assert!(run(command, &config(cfg), a.path()).status.success());
        assert!(run(command, &config(cfg), b.path()).status.success());
        let read = |d: &Path| std::fs::read(d.join(artifact)).unwrap();
        assert_eq!(read(a.path()), read(b.path()), "{artifact} differs between runs");
    }
}

#[test]
fn echoed_config_reloads_to_the_same_run() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run("evolve", &config("sync.toml"), dir.path()).status.success());
    let first = report(dir.path());
    let echoed: toml::Value = serde_json::from_value(first["config"].clone()).unwrap();
    let cfg = dir.path().join("echo.toml");
    std::fs::write(&cfg, toml::to_string(&echoed).unwrap()).unwrap();
    let again = dir.path().join("again");
    assert!(run("evolve", &cfg, &again).status.success());
    assert_eq!(report(&again)["config"], first["config"]);
    assert_eq!(
        std::fs::read(dir.path().join("trajectory.csv")).unwrap(),
        std::fs::read(again.join("trajectory.csv")).unwrap()
    );
}

#[test]
fn synchronized_network_reports_locked_outer_oscillators() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run("evolve", &config("sync.toml"), dir.path()).status.success());
    let m = &report(dir.path())["results"]["metrics"];
    assert!(m["min_abs_correlation"].as_f64().unwrap() >= 0.99);
    assert_eq!(m["signals"].as_array().unwrap().len(), 3);
}

#[test]
fn oracle_agrees_with_gaussian_engine() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("oracle", &config("oracle.toml"), dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = &report(dir.path())["results"];
    assert!(r["max_abs_difference"].as_f64().unwrap() < 1e-3);
    assert!(r["max_trace_deviation"].as_f64().unwrap() < 1e-6);
}
