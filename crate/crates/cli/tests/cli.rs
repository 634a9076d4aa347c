use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_trajkin");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn arg(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

fn write_profiles(path: &Path, trips: usize) {
    let mut text = String::new();
    for (id, speed) in [("010", 2.0), ("011", 9.0)] {
        text.push_str(&format!(
            "[[profiles]]\nuser_id = \"{id}\"\nmean_cruise_speed = {speed}\nspeed_jitter = 0.3\n\
             accel_scale = 0.05\ntrips = {trips}\npoints_per_trip = 40\nsampling_period = 5.0\n\
             gps_noise_std = 0.0\n\n"
        ));
    }
    fs::write(path, text).unwrap();
}

fn synth(dir: &Path, trips: usize) -> std::path::PathBuf {
    let profiles = dir.join("profiles.toml");
    write_profiles(&profiles, trips);
    let root = dir.join("geo");
    let out = run(&[
        "synth",
        "--profiles",
        arg(&profiles),
        "--out",
        arg(&root),
        "--seed",
        "5",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    root
}

#[test]
fn synth_writes_geolife_layout() {
    let dir = tempfile::tempdir().unwrap();
    let root = synth(dir.path(), 30);
    let mut users: Vec<_> = fs::read_dir(root.join("Data"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    users.sort();
    assert_eq!(users, ["010", "011"]);
    let mut labels = 0;
    for u in &users {
        let text = fs::read_to_string(root.join("Data").join(u).join("labels.txt")).unwrap();
        labels += text
            .lines()
            .skip(1)
            .filter(|l| !l.trim().is_empty())
            .count();
        let plts = fs::read_dir(root.join("Data").join(u).join("Trajectory"))
            .unwrap()
            .count();
        assert_eq!(plts, 30);
    }
    assert_eq!(labels, 60);
}

#[test]
fn round_trip_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let root = synth(dir.path(), 35);
    let mut snapshots = Vec::new();
    for name in ["a", "b"] {
        let out_dir = dir.path().join(name);
        for sub in ["extract", "classify", "anomaly"] {
            let out = run(&[
                sub,
                "--root",
                arg(&root),
                "--out",
                arg(&out_dir),
                "--seed",
                "11",
                "--trials",
                "2",
            ]);
            assert!(
                out.status.success(),
                "{sub}: {}",
                String::from_utf8_lossy(&out.stderr)
            );
        }
        let files = [
            "features.csv",
            "classification_report.json",
            "confusion_matrix.csv",
            "per_class_metrics.csv",
            "anomaly_trials.csv",
            "anomaly_summary.json",
        ];
        snapshots.push(
            files
                .iter()
                .map(|f| fs::read_to_string(out_dir.join(f)).unwrap())
                .collect::<Vec<_>>(),
        );
    }
    assert_eq!(snapshots[0], snapshots[1]);

    let features = &snapshots[0][0];
    assert!(features.starts_with("user_id,"));
    let trials = &snapshots[0][4];
    assert_eq!(trials.lines().count(), 1 + 2 * 2);

    let report: serde_json::Value = serde_json::from_str(&snapshots[0][1]).unwrap();
    assert_eq!(report["classes"].as_array().unwrap().len(), 2);
}

#[test]
fn missing_root_exits_with_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["extract", "--root", arg(&dir.path().join("absent"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn missing_features_file_exits_with_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["classify", "--out", arg(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_settings_exit_with_validation_error() {
    let out = run(&["anomaly", "--rate", "1.5"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["classify", "--k-folds", "1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn too_few_trips_per_class_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let root = synth(dir.path(), 3);
    let out_dir = dir.path().join("res");
    let out = run(&[
        "extract",
        "--root",
        arg(&root),
        "--out",
        arg(&out_dir),
        "--min-trips",
        "1",
    ]);
    assert!(out.status.success());
    let out = run(&["classify", "--out", arg(&out_dir), "--k-folds", "5"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn config_file_is_honoured() {
    let dir = tempfile::tempdir().unwrap();
    let root = synth(dir.path(), 30);
    let out_dir = dir.path().join("cfg_out");
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        format!(
            "root = {:?}\nout = {:?}\nmin_trips = 40\n",
            arg(&root),
            arg(&out_dir)
        ),
    )
    .unwrap();
    let out = run(&["extract", "--config", arg(&cfg)]);
    assert!(out.status.success());
    let text = fs::read_to_string(out_dir.join("features.csv")).unwrap();
    assert_eq!(
        text.lines().count(),
        1,
        "every user is under the 40-trip threshold"
    );

    fs::write(&cfg, "bogus = 1\n").unwrap();
    let out = run(&["extract", "--config", arg(&cfg)]);
    assert_eq!(out.status.code(), Some(1));
}
