use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use feshbach_stirap::dynamics::CSV_HEADER;
use serde_json::Value;

fn run(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_feshbach-stirap"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn ok(out: &Path, args: &[&str]) -> Value {
    let o = run(out, args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    summary(&out.join("summary.json"))
}

fn schema() -> jsonschema::Validator {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/summary.schema.json");
    let s: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::validator_for(&s).expect("schema compiles")
}

fn summary(path: &Path) -> Value {
    let v: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    let errors: Vec<String> = schema().iter_errors(&v).map(|e| format!("{e} at {}", e.instance_path())).collect();
    assert!(errors.is_empty(), "{}: {errors:#?}", path.display());
    v
}

fn stderr_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stderr).unwrap_or_else(|_| panic!("not JSON: {}", String::from_utf8_lossy(&o.stderr)))
}

fn without_timestamp(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("timestamp_unix_s");
    v
}

fn tmp() -> tempfile::TempDir {
    tempfile::tempdir().unwrap()
}

#[test]
fn simulate_broad_preset() {
    let d = tmp();
    let s = ok(d.path(), &["simulate", "--config", "preset:table1_broad"]);
    let eff = s["efficiency"].as_f64().unwrap();
    assert!(eff >= 0.90, "{eff}");
    assert!((s["intensities"]["pump_w_per_cm2"].as_f64().unwrap() / 4000.0 - 1.0).abs() < 1e-9);
    assert_eq!(s["tool_version"], env!("CARGO_PKG_VERSION"));

    let csv = fs::read_to_string(d.path().join("timeseries.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len() as u64, s["integration"]["samples"].as_u64().unwrap());
    let last: Vec<f64> = rows.last().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(last.len(), 9);
    assert!((last[5] - eff).abs() < 1e-12);
}

#[test]
fn optimize_lifts_broad_transfer_above_095() {
    let d = tmp();
    let s = ok(d.path(), &["optimize", "--config", "preset:table1_broad"]);
    let best = s["optimization"]["best_value"].as_f64().unwrap();
    assert!(best >= 0.95, "{best}");
    assert!((s["efficiency"].as_f64().unwrap() - best).abs() < 1e-9);
    let params = s["optimization"]["best_params"].as_object().unwrap();
    let names: Vec<&str> = params.keys().map(String::as_str).collect();
    assert_eq!(names, ["delta", "t0", "two_photon_offset"]);
}

#[test]
fn estimate_li6_preset() {
    let d = tmp();
    let s = ok(d.path(), &["estimate", "--config", "preset:li6_estimate"]);
    let e = &s["estimate"];
    let f = e["f"].as_f64().unwrap();
    assert!(f / 2.5e-4 > 0.5 && f / 2.5e-4 < 2.0, "{f}");
    let rate = e["production_rate_per_s"].as_f64().unwrap();
    assert!((1e8..=1e10).contains(&rate), "{rate}");
    assert_eq!(e["p_avg_source"], "config");
}

#[test]
fn remaining_commands_write_valid_summaries() {
    let d = tmp();
    let s = ok(
        &d.path().join("oracle"),
        &["oracle", "--config", "preset:table1_none", "--set", "oracle.n_states=256"],
    );
    assert_eq!(s["oracle"]["reduced_regime"], "none");
    assert!(s["final_populations"]["continuum"].is_number());

    let s = ok(
        &d.path().join("average"),
        &["average", "--config", "preset:table2_avg_broad", "--set", "ensemble.n_nodes=8"],
    );
    assert_eq!(s["average"]["nodes"].as_array().unwrap().len(), 8);

    let dir = d.path().join("sweep");
    let s = ok(&dir, &["sweep", "--config", "preset:table1_narrow"]);
    let points = s["sweep"]["points"].as_array().unwrap();
    let csv = fs::read_to_string(dir.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), points.len() + 1);
    let first = points[0]["efficiency"].as_f64().unwrap();
    let last = points.last().unwrap()["efficiency"].as_f64().unwrap();
    assert!(last > first + 0.2, "{first} -> {last}");
}

#[test]
fn repeated_runs_are_identical_apart_from_timestamp() {
    let d = tmp();
    let (a, b) = (d.path().join("a"), d.path().join("b"));
    for cmd in ["simulate", "optimize"] {
        let sa = ok(&a.join(cmd), &[cmd, "--config", "preset:table1_broad"]);
        let sb = ok(&b.join(cmd), &[cmd, "--config", "preset:table1_broad"]);
        assert_eq!(without_timestamp(sa), without_timestamp(sb), "{cmd}");
        let csv = |p: &PathBuf| fs::read(p.join(cmd).join("timeseries.csv")).unwrap();
        assert_eq!(csv(&a), csv(&b), "{cmd}");
    }
}

#[test]
fn existing_outputs_need_force() {
    let d = tmp();
    let args = ["simulate", "--config", "preset:table1_narrow"];
    ok(d.path(), &args);
    let before = fs::read(d.path().join("summary.json")).unwrap();
    let o = run(d.path(), &args);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(stderr_json(&o)["error"]["kind"], "would_overwrite");
    assert_eq!(fs::read(d.path().join("summary.json")).unwrap(), before);
    let o = run(d.path(), &["simulate", "--config", "preset:table1_narrow", "--force"]);
    assert!(o.status.success());
}

#[test]
fn config_errors_are_machine_readable() {
    let d = tmp();
    let empty = d.path().join("empty.json");
    fs::write(&empty, "{}").unwrap();
    let o = run(&d.path().join("x"), &["simulate", "--config", empty.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr_json(&o);
    assert_eq!(e["status"], "error");
    assert_eq!(e["error"]["kind"], "config");
    let details: Vec<&str> = e["error"]["details"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    for field in ["regime", "wavepacket.eps0", "pulses.pump.width", "decay_rate"] {
        assert!(details.iter().any(|m| m.starts_with(field)), "{field}: {details:?}");
    }

    let o = run(&d.path().join("y"), &["simulate", "--config", "preset:table1_broad", "--set", "pulses.shape=flat"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr_json(&o)["error"]["details"][0].as_str().unwrap().starts_with("pulses.shape"));

    let o = run(&d.path().join("z"), &["optimize", "--config", "preset:table1_narrow"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!d.path().join("z").join("summary.json").exists());
}

#[test]
fn config_file_with_overrides() {
    let d = tmp();
    let path = d.path().join("cfg.json");
    fs::write(&path, feshbach_stirap::config::preset("table1_broad").unwrap()).unwrap();
    let s = ok(
        &d.path().join("out"),
        &["simulate", "--config", path.to_str().unwrap(), "--set", "name=custom", "--set", "integration.samples=11"],
    );
    assert_eq!(s["name"], "custom");
    assert_eq!(s["integration"]["samples"], 11);
}
