use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;
use vimsim::summary::{ProtocolResults, Summary};
use vimsim_core::fitting::synthetic::synthetic_sweep;
use vimsim_core::ViscoelasticModel;

fn vimsim(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vimsim"))
        .args(args)
        .current_dir(cwd)
        .env_remove("VIMSIM_OUT")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, v: Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, v.to_string()).unwrap();
    p
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn hot_perturbation_is_more_damped() {
    let tmp = TempDir::new().unwrap();
    write_config(tmp.path(), "p.json", json!({"geometry": {}, "protocol": {"name": "perturbation"}}));
    assert!(vimsim(&["run", "p.json", "--out", "cold"], tmp.path()).status.success());
    let o = vimsim(&["run", "p.json", "--set", "protocol.temperature_c=100", "--out", "hot"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let zeta = |d: &str| summary(&tmp.path().join(d))["results"]["damping_ratio"].as_f64().unwrap();
    assert!(zeta("hot") > zeta("cold"));
}

#[test]
fn thermal_defaults_reach_100c_in_70s() {
    let tmp = TempDir::new().unwrap();
    write_config(tmp.path(), "t.json", json!({"geometry": {}, "protocol": {"name": "thermal"}}));
    assert!(vimsim(&["run", "t.json", "--out", "o"], tmp.path()).status.success());
    let s = summary(&tmp.path().join("o"));
    let t = s["results"]["time_to_target_s"].as_f64().unwrap();
    assert!((t - 70.0).abs() <= 0.5, "{t}");
    let crossing = s["results"]["trace_crossing_s"].as_f64().unwrap();
    assert!((crossing - 70.0).abs() <= 0.5, "{crossing}");
}

#[test]
fn missing_geometry_exits_2_naming_it() {
    let tmp = TempDir::new().unwrap();
    write_config(tmp.path(), "c.json", json!({"protocol": {"name": "thermal"}}));
    let o = vimsim(&["run", "c.json", "--out", "o"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("geometry"));
    assert!(!tmp.path().join("o").exists());
}

#[test]
fn validate_reports_every_violation_without_side_effects() {
    let tmp = TempDir::new().unwrap();
    write_config(tmp.path(), "p.json", json!({"geometry": {}, "protocol": {"name": "perturbation"}}));
    let ok = vimsim(&["validate", "p.json", "--out", "o"], tmp.path());
    assert_eq!(ok.status.code(), Some(0), "{}", stderr(&ok));
    let o = vimsim(
        &["validate", "p.json", "--set", "protocol.theta0_rad=0.2", "--set", "protocol.dt_s=0.001", "--out", "o"],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("0.2") && err.contains("0.104"), "{err}");
    assert!(err.contains("dt must be <= 3.574"), "{err}");
    assert!(!tmp.path().join("o").exists());
}

#[test]
fn unknown_protocol_and_bad_override_exit_2() {
    let tmp = TempDir::new().unwrap();
    write_config(tmp.path(), "x.json", json!({"geometry": {}, "protocol": {"name": "spin-test"}}));
    let o = vimsim(&["run", "x.json"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("spin-test"));
    write_config(tmp.path(), "t.json", json!({"geometry": {}, "protocol": {"name": "thermal"}}));
    let o = vimsim(&["run", "t.json", "--set", "thermal.gain=3"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("thermal.gain"));
}

#[test]
fn unwritable_output_is_a_validation_error() {
    let tmp = TempDir::new().unwrap();
    write_config(tmp.path(), "t.json", json!({"geometry": {}, "protocol": {"name": "thermal"}}));
    std::fs::write(tmp.path().join("blocker"), "").unwrap();
    let o = vimsim(&["run", "t.json", "--out", "blocker/out"], tmp.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    write_config(tmp.path(), "p.json", json!({"geometry": {}, "protocol": {"name": "perturbation"}}));
    for d in ["a", "b"] {
        assert!(vimsim(&["run", "p.json", "--out", d], tmp.path()).status.success());
    }
    for f in ["trace.csv", "trace.json", "summary.json", "plots/torque_vs_angle.dat", "plots/plot.gp"] {
        let a = std::fs::read(tmp.path().join("a").join(f)).unwrap();
        let b = std::fs::read(tmp.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
}

#[test]
fn every_file_embeds_the_digest_and_summary_round_trips() {
    let tmp = TempDir::new().unwrap();
    write_config(tmp.path(), "f.json", json!({"geometry": {}, "protocol": {"name": "freq-sweep"}}));
    assert!(vimsim(&["run", "f.json", "--out", "o"], tmp.path()).status.success());
    let raw = std::fs::read_to_string(tmp.path().join("o/summary.json")).unwrap();
    let s: Summary = serde_json::from_str(&raw).unwrap();
    assert!(matches!(s.results, ProtocolResults::FreqSweep(_)));
    let again: Value = serde_json::to_value(&s).unwrap();
    assert_eq!(again, serde_json::from_str::<Value>(&raw).unwrap());
    for f in ["sweep.csv", "sweep.json", "plots/storage_modulus.dat", "plots/plot.gp"] {
        let text = std::fs::read_to_string(tmp.path().join("o").join(f)).unwrap();
        assert!(text.contains(&s.config_digest), "{f}");
    }
    assert!(s.spring_stiffness.note.contains("discrepancy"));
}

#[test]
fn format_flag_and_env_output_dir() {
    let tmp = TempDir::new().unwrap();
    write_config(tmp.path(), "t.json", json!({"geometry": {}, "protocol": {"name": "thermal"}}));
    let o = Command::new(env!("CARGO_BIN_EXE_vimsim"))
        .args(["run", "t.json", "--format", "csv"])
        .current_dir(tmp.path())
        .env("VIMSIM_OUT", "from-env")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let dir = tmp.path().join("from-env");
    assert!(dir.join("trace.csv").exists());
    assert!(!dir.join("trace.json").exists());
}

#[test]
fn temperature_sweep_table_is_monotone() {
    let tmp = TempDir::new().unwrap();
    write_config(tmp.path(), "p.json", json!({"geometry": {}, "protocol": {"name": "perturbation"}}));
    let o = vimsim(
        &["sweep", "p.json", "--axis", "protocol.temperature_c", "--values", "30,60,100", "--out", "s"],
        tmp.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(tmp.path().join("s/sweep.csv")).unwrap();
    let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == "effective_stiffness_nm_per_rad").unwrap();
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.iter().map(|r| r[0]).collect::<Vec<_>>(), ["30", "60", "100"]);
    let stiff: Vec<f64> = rows.iter().map(|r| r[k].parse().unwrap()).collect();
    assert!(stiff[0] > stiff[1] && stiff[1] > stiff[2], "{stiff:?}");
    for v in ["30", "60", "100"] {
        assert!(tmp.path().join(format!("s/protocol.temperature_c={v}/summary.json")).exists());
    }
}

#[test]
fn sweep_edge_cases() {
    let tmp = TempDir::new().unwrap();
    write_config(tmp.path(), "t.json", json!({"geometry": {}, "protocol": {"name": "thermal"}}));
    let o = vimsim(&["sweep", "t.json", "--axis", "protocol.current_a", "--values"], tmp.path());
    assert_eq!(o.status.code(), Some(2));

    assert!(vimsim(&["sweep", "t.json", "--axis", "protocol.current_a", "--values", "1.5", "--out", "s"], tmp.path())
        .status
        .success());
    assert!(vimsim(&["run", "t.json", "--set", "protocol.current_a=1.5", "--out", "r"], tmp.path())
        .status
        .success());
    for f in ["trace.csv", "trace.json", "summary.json"] {
        let a = std::fs::read(tmp.path().join("s/protocol.current_a=1.5").join(f)).unwrap();
        let b = std::fs::read(tmp.path().join("r").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
}

fn write_sweep_csv(path: &Path, e1: f64, eta: f64, t: f64, spoil: bool) {
    let m = ViscoelasticModel::kelvin_voigt(e1, eta).unwrap();
    let ds = synthetic_sweep(&m, 0.1, 628.0, 20, t).unwrap();
    let mut s = String::from("omega_rad_s,g_prime_pa,g_double_prime_pa\n");
    for i in 0..ds.len() {
        let g1 = if spoil && i == 3 { -1.0 } else { ds.y[0][i] };
        s.push_str(&format!("{:e},{:e},{:e}\n", ds.x[i], g1, ds.y[1][i]));
    }
    std::fs::write(path, s).unwrap();
}

#[test]
fn fit_command_builds_a_table() {
    let tmp = TempDir::new().unwrap();
    write_sweep_csv(&tmp.path().join("cold.csv"), 1e6, 30.0, 30.0, false);
    write_sweep_csv(&tmp.path().join("hot.csv"), 1e2, 8.0, 100.0, false);
    let o = vimsim(&["fit", "hot.csv@100", "cold.csv@30", "--family", "kv", "--out", "o"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let s = summary(&tmp.path().join("o"));
    let fits = s["results"]["fits"].as_array().unwrap();
    assert_eq!(fits[0]["temperature_c"], 30.0);
    let e1 = fits[0]["result"]["model"]["e1_pa"].as_f64().unwrap();
    assert!((e1 / 1e6 - 1.0).abs() < 0.01, "{e1}");
    assert!(tmp.path().join("o/material_table.json").exists());
}

#[test]
fn failing_fit_is_a_runtime_error() {
    let tmp = TempDir::new().unwrap();
    write_sweep_csv(&tmp.path().join("bad.csv"), 1e4, 10.0, 60.0, true);
    let o = vimsim(&["fit", "bad.csv@60", "--out", "o"], tmp.path());
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("60"));
}
