use std::process::Command;

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ivisflow"))
}

#[test]
fn generate_writes_corpus() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"seed": 42, "task": {"start_element": "A", "end_element": "C"},
            "planted_flows": [{"path": ["A", "B", "C"], "count": 3}], "noise_trips": 2}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let status = bin()
        .args(["generate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out.join("concept.json").is_file());
    assert!(out.join("trips-0000.jsonl").is_file());
}

#[test]
fn serve_requires_data_dir() {
    let o = bin().args(["--port", "0"]).output().unwrap();
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("--data-dir"));
}

#[test]
fn broken_concept_db_stops_startup() {
    let dir = TempDir::new().unwrap();
    let o = bin()
        .arg("--data-dir")
        .arg(dir.path())
        .arg("--concept-db")
        .arg(dir.path().join("missing.json"))
        .args(["--port", "0"])
        .output()
        .unwrap();
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
}

#[test]
fn demo_config_generates() {
    let cfg = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/demo.json");
    let out = TempDir::new().unwrap();
    let o = bin().args(["generate", "--config", cfg, "--out"]).arg(out.path()).output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("wrote 200 trips in 4 files"));
}
