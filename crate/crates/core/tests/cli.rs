use std::path::Path;
use std::process::Command;

use serde_json::Value;
use sync_lab::cli::{read_trajectory_csv, write_trajectory_csv};
use sync_lab::experiments::{load_config_str, run, Experiment};
use sync_lab::{integrate, PhaseState, SystemParams};

const BIN: &str = env!("CARGO_BIN_EXE_sync-lab");

const TWO_OSC: &str = r#"{"seed": 1, "n": 2, "inertia_m": 0.01, "coupling_kappa": 1.0, "horizon": 200}"#;

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn sync_lab(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(BIN).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn certify_two_oscillators_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "two_osc.json", TWO_OSC);
    let out = dir.path().join("out");
    let (code, stdout, _) = sync_lab(&["certify", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(stdout.contains("verdict=pass"));
    let rep = report(&out);
    assert_eq!(rep["verdict"], Value::Bool(true));
    assert_eq!(rep["summary"]["case"], "two_oscillators");
    assert!(out.join("trajectory.csv").exists());
}

#[test]
fn determinability_prints_nine_digits() {
    let (code, stdout, _) = sync_lab(&["determinability", "--m", "1", "--kappa", "0.5"]);
    assert_eq!(code, 0);
    assert_eq!(stdout.trim(), "threshold 4.71238898");
    let (_, stdout, _) = sync_lab(&["determinability", "--m", "0.5", "--kappa", "0.5"]);
    assert_eq!(stdout.trim(), "threshold inf");
}

#[test]
fn exit_code_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = d.join("out");
    let o = out.to_str().unwrap();

    let (code, _, stderr) = sync_lab(&["frobnicate"]);
    assert_eq!(code, 2);
    assert!(stderr.starts_with("error kind=usage"));

    let good = write(d, "sim.json", r#"{"n": 3, "inertia_m": 0.1, "coupling_kappa": 1.0, "horizon": 2}"#);
    assert_eq!(sync_lab(&["simulate", "-c", good.to_str().unwrap(), "-o", o]).0, 0);

    // too short to lock
    let short = write(d, "short.json", r#"{"seed": 1, "n": 3, "inertia_m": 0.01, "coupling_kappa": 1.0, "horizon": 1}"#);
    assert_eq!(sync_lab(&["certify", "-c", short.to_str().unwrap(), "-o", o]).0, 1);
    assert_eq!(report(&out)["verdict"], Value::Bool(false));

    let bad = write(d, "bad.json", r#"{"n": 2, "inertia_m": 0.1, "coupling_kappa": -1.0, "horizon": 2}"#);
    let (code, _, stderr) = sync_lab(&["simulate", "-c", bad.to_str().unwrap(), "-o", o]);
    assert_eq!(code, 2);
    assert!(stderr.contains("kind=invalid key=coupling_kappa"), "{stderr}");

    let unknown = write(d, "unknown.json", r#"{"n": 2, "inertia_m": 0.1, "coupling_kappa": 1.0, "horizon": 2, "colour": 3}"#);
    assert_eq!(sync_lab(&["simulate", "-c", unknown.to_str().unwrap(), "-o", o]).0, 2);
    assert_eq!(sync_lab(&["simulate", "-c", d.join("missing.json").to_str().unwrap(), "-o", o]).0, 2);

    let rec = write(d, "rec.json", r#"{"seed": 2, "n": 3, "inertia_m": 0.2, "coupling_kappa": 1.0, "horizon": 1, "knobs": {"t0": 0.4}}"#);
    assert_eq!(sync_lab(&["reconstruct", "-c", rec.to_str().unwrap(), "-o", o]).0, 0);
    let (code, _, stderr) = sync_lab(&["reconstruct", "-c", rec.to_str().unwrap(), "-o", o, "--set", "knobs.max_iter=1"]);
    assert_eq!(code, 3);
    assert!(stderr.starts_with("error kind=non_convergence"));
    // beyond the contraction horizon
    let (code, _, stderr) = sync_lab(&["reconstruct", "-c", rec.to_str().unwrap(), "-o", o, "--set", "knobs.t0=0.6"]);
    assert_eq!(code, 2);
    assert!(stderr.starts_with("error kind=precondition"));
}

#[test]
fn overrides_are_echoed() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let (code, _, _) = sync_lab(&[
        "simulate",
        "--set",
        "n=2",
        "--set",
        "inertia_m=0.25",
        "--set",
        "coupling_kappa=1",
        "--set",
        "horizon=1",
        "-o",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let rep = report(&out);
    assert_eq!(rep["config"]["inertia_m"], 0.25);
    assert_eq!(rep["overrides"][1], "inertia_m=0.25");
}

#[test]
fn sweep_keeps_scenario_order() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "sweep.json",
        r#"{"scenarios": [
            {"experiment": "determinability", "n": 2, "inertia_m": 1.0, "coupling_kappa": 1.0, "horizon": 5, "tol": 1e-10},
            {"experiment": "simulate", "n": 2, "inertia_m": 0.1, "coupling_kappa": 1.0, "horizon": 1},
            {"experiment": "reconstruction", "n": 2, "inertia_m": 0.2, "coupling_kappa": 1.0, "horizon": 1}
        ]}"#,
    );
    let out = dir.path().join("out");
    let status = Command::new(BIN)
        .args(["sweep", "-c", cfg.to_str().unwrap(), "-o", out.to_str().unwrap()])
        .env("SYNC_LAB_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(0));
    let rep = report(&out);
    let kinds: Vec<&str> = rep["children"].as_array().unwrap().iter().map(|c| c["experiment"].as_str().unwrap()).collect();
    assert_eq!(kinds, ["determinability", "simulate", "reconstruction"]);
    assert!(out.join("scenario1_trajectory.csv").exists());

    let status = Command::new(BIN)
        .args(["sweep", "-c", cfg.to_str().unwrap(), "-o", out.to_str().unwrap()])
        .env("SYNC_LAB_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&status.stderr).contains("key=SYNC_LAB_THREADS"));
}

#[test]
fn csv_round_trip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let p = SystemParams::new(0.2, 1.0, vec![0.7]).unwrap();
    let tr = integrate(&p, &PhaseState::initial(vec![0.1], vec![-0.4]), 2.0, 1e-9).unwrap();
    let path = dir.path().join("one.csv");
    write_trajectory_csv(&tr, &path).unwrap();
    let (header, rows) = read_trajectory_csv(&path).unwrap();
    assert_eq!(header, ["t", "theta_1", "omega_1", "R", "D_theta", "D_omega"]);
    assert_eq!(rows.len(), tr.states().len());
    for (row, s) in rows.iter().zip(tr.states()) {
        assert_eq!(row[0].to_bits(), s.t.to_bits());
        assert_eq!(row[1].to_bits(), s.theta[0].to_bits());
        assert_eq!(row[2].to_bits(), s.omega[0].to_bits());
        assert!((0.0..=1.0).contains(&row[3]));
    }
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(!text.contains('\r'));
}

#[test]
fn reports_are_deterministic() {
    let cfg = load_config_str(
        r#"{"seed": 9, "n": 4, "inertia_m": 0.05, "coupling_kappa": 1.0, "horizon": 1.0,
            "knobs": {"m_list": [0.1, 0.05], "n_max": 3, "jet_times": [0.5]}}"#,
        &[],
    )
    .unwrap();
    for exp in [Experiment::TikhonovSweep, Experiment::Simulate] {
        let mut a = serde_json::to_value(run(exp, &cfg).unwrap()).unwrap();
        let mut b = serde_json::to_value(run(exp, &cfg).unwrap()).unwrap();
        a["wall_time_s"] = Value::Null;
        b["wall_time_s"] = Value::Null;
        assert_eq!(a, b);
        let checks = a["checks"].as_array().unwrap();
        let conj = checks.iter().all(|c| c["pass"].as_bool().unwrap());
        assert_eq!(a["verdict"].as_bool().unwrap(), conj);
    }
}
