use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn anomscale(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_anomscale"))
        .args(args)
        .env_remove("ANOMSCALE_THREADS")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

#[test]
fn generate_is_reproducible_and_writes_the_binary_format() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (path(dir.path(), "a.ansc"), path(dir.path(), "b.ansc"));
    for file in [&a, &b] {
        let out = anomscale(&["generate", "--family", "fbm", "--J", "0.7", "--paths", "20", "--steps", "64", "--seed", "1", "-o", file]);
        let v = json(&out);
        assert_eq!(v["descriptor"]["family"], "FBM");
        assert_eq!(v["descriptor"]["J"], 0.7);
    }
    let (x, y) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(x, y);
    assert_eq!(&x[..4], b"ANSC");
    assert_eq!(u64::from_le_bytes(x[8..16].try_into().unwrap()), 20);
    assert_eq!(u64::from_le_bytes(x[16..24].try_into().unwrap()), 64);
}

#[test]
fn csv_output_by_extension() {
    let dir = tempfile::tempdir().unwrap();
    let file = path(dir.path(), "e.csv");
    json(&anomscale(&["generate", "--family", "sbm", "--M", "0.3", "--paths", "3", "--steps", "5", "-o", &file]));
    let text = std::fs::read_to_string(&file).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().all(|l| l.split(',').count() == 5));
}

#[test]
fn low_joseph_flm_warns() {
    let dir = tempfile::tempdir().unwrap();
    let file = path(dir.path(), "flm.ansc");
    let out = anomscale(&["generate", "--family", "flm", "--J", "0.4", "--L", "0.6", "--paths", "2", "--steps", "32", "-o", &file]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("R/S-unreliable"));
}

#[test]
fn flag_validation_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let file = path(dir.path(), "x.ansc");
    for args in [
        vec!["generate", "--family", "bm", "--J", "0.7", "--paths", "2", "--steps", "4", "-o", &file],
        vec!["generate", "--family", "sbm", "--paths", "2", "--steps", "4", "-o", &file],
        vec!["generate", "--family", "fbm", "--J", "1.5", "--paths", "2", "--steps", "4", "-o", &file],
        vec!["generate", "--family", "bm", "--paths", "0", "--steps", "4", "-o", &file],
        vec!["generate", "--family", "nope", "--paths", "2", "--steps", "4", "-o", &file],
        vec!["estimate", "/definitely/not/here.ansc"],
    ] {
        let out = anomscale(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn estimate_reports_exponents_and_is_thread_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let file = path(dir.path(), "sbm.ansc");
    json(&anomscale(&["generate", "--family", "sbm", "--M", "0.6", "--paths", "2000", "--steps", "2000", "--seed", "3", "-o", &file]));
    let out_dir = path(dir.path(), "out");
    let base = ["estimate", &file, "--count", "200", "--bootstrap", "20", "--seed", "5"];
    let mut one = base.to_vec();
    one.extend(["--threads", "1", "--out-dir", &out_dir]);
    let a = json(&anomscale(&one));
    let mut three = base.to_vec();
    three.extend(["--threads", "3"]);
    let b = json(&anomscale(&three));
    assert_eq!(a["report"], b["report"]);
    assert_eq!(a["fits"], b["fits"]);

    let m = a["report"]["M"]["value"].as_f64().unwrap();
    assert!((0.58..=0.62).contains(&m), "M = {m}");
    for key in ["J", "L"] {
        let v = a["report"][key]["value"].as_f64().unwrap();
        assert!((0.44..=0.56).contains(&v), "{key} = {v}");
    }
    assert_eq!(a["config"]["t_min"], 50);
    assert_eq!(a["config"]["options"]["bootstrap"], 20);
    assert_eq!(a["ensemble"]["descriptor"]["M"], 0.6);
    assert!(Path::new(&out_dir).join("report.json").is_file());
    for name in ["rs_mean", "median_z", "median_y", "width_iqr"] {
        assert!(Path::new(&out_dir).join(format!("{name}_fit.csv")).is_file(), "{name}");
    }
}

#[test]
fn estimation_failure_exits_4_and_names_the_exponent() {
    let dir = tempfile::tempdir().unwrap();
    let file = path(dir.path(), "flat.csv");
    let row = vec!["0"; 200].join(",");
    std::fs::write(&file, format!("{row}\n{row}\n{row}\n{row}\n")).unwrap();
    let out = anomscale(&["estimate", &file, "--t-min", "10", "--count", "20", "--bootstrap", "4"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("exponent"));
}

#[test]
fn market_on_synthetic_prices() {
    let dir = tempfile::tempdir().unwrap();
    let prices = path(dir.path(), "synth.csv");
    let s = json(&anomscale(&["synth-prices", "--H", "0.3", "--days", "300", "--seed", "2", "-o", &prices]));
    assert_eq!(s["synthetic"]["n_days"], 300);
    let out_dir = path(dir.path(), "m");
    let v = json(&anomscale(&[
        "market", &prices, "--interval", "20:190", "--bootstrap", "10", "--seed", "1", "--out-dir", &out_dir,
    ]));
    assert_eq!(v["n_days"], 300);
    assert_eq!(v["config"]["intervals"][0]["t_min"], 10);
    assert_eq!(v["config"]["intervals"][0]["grid_count"], 60);
    assert_eq!(v["profile"]["t"].as_array().unwrap().len(), 389);
    let m = v["intervals"][0]["report"]["M"]["value"].as_f64().unwrap();
    assert!((0.2..0.4).contains(&m), "M = {m}");
    assert!(Path::new(&out_dir).join("profile.csv").is_file());
    assert!(Path::new(&out_dir).join("interval_20_190").is_dir());
}

#[test]
fn market_default_intervals() {
    let dir = tempfile::tempdir().unwrap();
    let prices = path(dir.path(), "synth.csv");
    json(&anomscale(&["synth-prices", "--days", "40", "-o", &prices]));
    let v = json(&anomscale(&["market", &prices, "--bootstrap", "4"]));
    let iv: Vec<String> = v["intervals"]
        .as_array()
        .unwrap()
        .iter()
        .map(|i| format!("{}:{}", i["interval"]["start"], i["interval"]["end"]))
        .collect();
    assert_eq!(iv, ["30:190", "260:380"]);
}

#[test]
fn market_input_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let empty = path(dir.path(), "empty.csv");
    std::fs::write(&empty, "").unwrap();
    let out = anomscale(&["market", &empty]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no trading days"));

    let bad = path(dir.path(), "bad.csv");
    std::fs::write(&bad, "2020-01-02,09:30,1,1,1,1,0\n2020-01-02,09:31,1,1,1,oops,0\n").unwrap();
    let out = anomscale(&["market", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    let out = anomscale(&["market", &empty, "--interval", "30-190"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn thread_count_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let file = path(dir.path(), "bm.ansc");
    let out = Command::new(env!("CARGO_BIN_EXE_anomscale"))
        .args(["generate", "--family", "bm", "--paths", "8", "--steps", "16", "-o", &file])
        .env("ANOMSCALE_THREADS", "2")
        .output()
        .unwrap();
    assert!(out.status.success());
    let out = Command::new(env!("CARGO_BIN_EXE_anomscale"))
        .args(["generate", "--family", "bm", "--paths", "8", "--steps", "16", "-o", &file])
        .env("ANOMSCALE_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
