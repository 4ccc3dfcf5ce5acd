use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_seamdetect"))
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

fn synth(dir: &Path, kind: &str) -> (PathBuf, PathBuf) {
    let cloud = dir.join(format!("{kind}.ply"));
    let out = run(bin()
        .args(["synth", "--kind", kind, "--size", "0.1", "--spacing", "0.002", "--seed", "1", "--report"])
        .arg(dir.join(format!("{kind}.synth.json")))
        .arg(&cloud));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let labels = dir.join(format!("{kind}.labels.xyz"));
    assert!(labels.exists());
    (cloud, labels)
}

#[test]
fn missing_input_is_an_io_error_naming_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.ply");
    let out = run(bin().arg("edges").arg(&missing).arg(dir.path().join("out.ply")));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains(missing.to_str().unwrap()));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(bin().arg("frobnicate")).status.code(), Some(1));
    assert_eq!(run(bin().args(["edges", "--k", "ten", "a.ply", "b.ply"])).status.code(), Some(1));
    assert_eq!(run(bin().arg("--help")).status.code(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let (cloud, _) = synth(dir.path(), "plane");
    let conf = dir.path().join("bad.conf");
    std::fs::write(&conf, "corner.theta1_deg = 140\n").unwrap();
    let out = run(bin().arg("corners").arg("--config").arg(&conf).arg(&cloud).arg(dir.path().join("o.ply")));
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("theta"));

    std::fs::write(&conf, "edge.kk = 3\n").unwrap();
    let out = run(bin().arg("edges").arg("--config").arg(&conf).arg(&cloud).arg(dir.path().join("o.ply")));
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.conf:1"));
}

#[test]
fn too_few_points_is_a_computation_error() {
    let dir = tempfile::tempdir().unwrap();
    let cloud = dir.path().join("tiny.xyz");
    std::fs::write(&cloud, "0 0 0\n1 0 0\n0 1 0\n").unwrap();
    let out = run(bin().arg("edges").arg(&cloud).arg(dir.path().join("o.ply")));
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let (cloud, _) = synth(dir.path(), "plane");
    let conf = dir.path().join("p.conf");
    std::fs::write(&conf, "# file value\nedge.lambda = 8\nedge.k = 30\n").unwrap();
    let report = dir.path().join("r.json");
    let out = run(bin()
        .args(["edges", "--lambda", "2", "--config"])
        .arg(&conf)
        .arg("--report")
        .arg(&report)
        .arg(&cloud)
        .arg(dir.path().join("o.ply")));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = read_json(&report);
    assert_eq!(v["params"]["edge.lambda"], 2.0);
    assert_eq!(v["params"]["edge.k"], 30);
    assert_eq!(v["params"]["corner.K"], 20);
}

#[test]
fn edges_report_carries_checksum_and_stages() {
    let dir = tempfile::tempdir().unwrap();
    let (cloud, _) = synth(dir.path(), "plane");
    let report = dir.path().join("r.json");
    let ply = dir.path().join("o.ply");
    let out = run(bin().args(["edges", "--lambda", "1", "--report"]).arg(&report).arg(&cloud).arg(&ply));
    assert!(out.status.success());
    let v = read_json(&report);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["command"], "edges");
    let digest = hex::encode(Sha256::digest(std::fs::read(&cloud).unwrap()));
    assert_eq!(v["input"]["sha256"], digest.as_str());
    assert_eq!(v["input"]["points"], 51 * 51);
    let stages: Vec<&str> = v["stages"].as_array().unwrap().iter().map(|s| s["name"].as_str().unwrap()).collect();
    assert_eq!(stages, ["load", "edges"]);
    assert!(v["results"]["edges"].as_u64().unwrap() > 0);
    assert!(ply.exists());
}

#[test]
fn cube_round_trip_scores_perfect_corners() {
    let dir = tempfile::tempdir().unwrap();
    let (cloud, labels) = synth(dir.path(), "cube");
    let report = dir.path().join("pipeline.json");
    let ply = dir.path().join("pipeline.ply");
    let out = run(bin()
        .arg("pipeline")
        .arg("--config")
        .arg(config("cube.conf"))
        .arg("--report")
        .arg(&report)
        .arg(&cloud)
        .arg(&ply));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = read_json(&report);
    assert_eq!(v["results"]["corners"].as_array().unwrap().len(), 8);
    // The twelve cube edges, each a seam between two detected corners.
    assert_eq!(v["results"]["seams"].as_array().unwrap().len(), 12);

    let scores = dir.path().join("corners.json");
    let out = run(bin()
        .args(["eval", "--what", "corners", "--report"])
        .arg(&scores)
        .arg(&report)
        .arg(&labels));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let pr = &read_json(&scores)["results"]["pr"];
    assert_eq!(pr["tp"], 8);
    assert_eq!(pr["precision"], 1.0);
    assert_eq!(pr["recall"], 1.0);

    let scores = dir.path().join("edges.json");
    let out = run(bin().args(["eval", "--what", "edges", "--report"]).arg(&scores).arg(&ply).arg(&labels));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let pr = &read_json(&scores)["results"]["pr"];
    assert!(pr["recall"].as_f64().unwrap() > 0.99);
    assert!(pr["precision"].as_f64().unwrap() > 0.95);
}

#[test]
fn panel_seams() {
    let dir = tempfile::tempdir().unwrap();
    let (cloud, _) = synth(dir.path(), "panel");
    let report = dir.path().join("seams.json");
    let out = run(bin()
        .arg("seams")
        .arg("--config")
        .arg(config("panel.conf"))
        .args(["--corner-k", "21", "--epsilon", "1", "--theta1", "30", "--theta2", "140", "--report"])
        .arg(&report)
        .arg(&cloud));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = read_json(&report);
    for s in v["results"]["seams"].as_array().unwrap() {
        assert!(s["coverage"].as_f64().unwrap() >= 0.7);
        assert!(s["a"].as_u64().unwrap() < s["b"].as_u64().unwrap());
    }
}

#[test]
fn lambda_sweep_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let (_, labels) = synth(dir.path(), "cube");
    let csv = dir.path().join("sweep.csv");
    let report = dir.path().join("sweep.json");
    let out = run(bin()
        .args(["sweep", "--detector", "ms-edge", "--param", "lambda", "--values", "0.5,1,2,4", "--csv"])
        .arg(&csv)
        .arg("--report")
        .arg(&report)
        .arg(&labels));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("param,value,tp,fp,fn,precision,recall,millis"));
    let recall: Vec<f64> = lines
        .map(|l| {
            let cols: Vec<&str> = l.split(',').collect();
            assert_eq!(cols[0], "lambda");
            cols[6].parse().unwrap()
        })
        .collect();
    assert_eq!(recall.len(), 4);
    assert!(recall.windows(2).all(|w| w[1] <= w[0]), "{recall:?}");
    assert_eq!(read_json(&report)["results"]["sweep"].as_array().unwrap().len(), 4);

    let out = run(bin()
        .args(["sweep", "--detector", "ms-edge", "--param", "rho", "--values", "1"])
        .arg(&labels));
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn synth_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let (ca, la) = synth(a.path(), "lbracket");
    let (cb, lb) = synth(b.path(), "lbracket");
    assert_eq!(std::fs::read(ca).unwrap(), std::fs::read(cb).unwrap());
    assert_eq!(std::fs::read(la).unwrap(), std::fs::read(lb).unwrap());
}
