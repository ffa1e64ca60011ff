use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn intersect(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_intersect"))
        .args(args)
        .env("NO_COLOR", "1")
        .output()
        .expect("spawn intersect")
}

fn stdout_json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(intersect(&["--help"]).status.code(), Some(0));
    assert_eq!(intersect(&["--version"]).status.code(), Some(0));
    assert_eq!(intersect(&["harness", "--help"]).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(intersect(&["spectral", "--bogus"]).status.code(), Some(2));
    assert_eq!(intersect(&["spectral"]).status.code(), Some(2));
    assert_eq!(
        intersect(&["spectral", "--family", "cycle"]).status.code(),
        Some(2)
    );
    assert_eq!(
        intersect(&[
            "--threads",
            "0",
            "spectral",
            "--family",
            "cycle",
            "--n",
            "5"
        ])
        .status
        .code(),
        Some(2)
    );
    assert_eq!(
        intersect(&[
            "exact",
            "--quantity",
            "etauI",
            "--family",
            "cycle",
            "--n",
            "4",
            "--start",
            "0,9"
        ])
        .status
        .code(),
        Some(2)
    );
}

#[test]
fn generated_file_round_trips_through_spectral() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cycle8.txt");
    let out = intersect(&[
        "generate",
        "--family",
        "cycle",
        "--n",
        "8",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(fs::read_to_string(&path).unwrap().starts_with("n 8\n"));

    let from_file = stdout_json(&intersect(&["spectral", "--in", path.to_str().unwrap()]));
    let closed = stdout_json(&intersect(&["spectral", "--family", "cycle", "--n", "8"]));
    assert!(closed["spectrum_source"]
        .as_str()
        .unwrap()
        .starts_with("closed-form"));
    let (a, b) = (
        from_file["Q"].as_f64().unwrap(),
        closed["Q"].as_f64().unwrap(),
    );
    assert!((a / b - 1.0).abs() < 1e-9, "{a} vs {b}");
    assert_eq!(from_file["t_unif"], closed["t_unif"]);
}

#[test]
fn non_stochastic_file_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.txt");
    fs::write(&path, "n 2\n0 1 1.0\n1 0 0.9\n").unwrap();
    let out = intersect(&["spectral", "--in", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains('1'));
}

#[test]
fn exact_flip_value() {
    let v = stdout_json(&intersect(&[
        "exact",
        "--quantity",
        "etauI",
        "--family",
        "path",
        "--n",
        "2",
        "--start",
        "0,1",
    ]));
    assert!((v["value"].as_f64().unwrap() - 4.0 / 3.0).abs() < 1e-12);
    let thit = stdout_json(&intersect(&[
        "exact",
        "--quantity",
        "thit",
        "--family",
        "complete",
        "--n",
        "10",
    ]));
    assert!((thit["value"].as_f64().unwrap() - 18.0).abs() < 1e-9);
}

#[test]
fn mc_output_independent_of_threads() {
    let args = [
        "mc",
        "--family",
        "cycle",
        "--n",
        "10",
        "--samples",
        "500",
        "--seed",
        "42",
    ];
    let one = intersect(&[&["--threads", "1"], &args[..]].concat());
    let three = intersect(&[&["--threads", "3"], &args[..]].concat());
    assert!(one.status.success());
    assert_eq!(one.stdout, three.stdout);
    let v: Value = serde_json::from_slice(&one.stdout).unwrap();
    assert_eq!(v["t_i"]["estimate"]["seed"], 42);
}

#[test]
fn harness_run_writes_reports_and_fails_on_forced_window() {
    let dir = tempfile::tempdir().unwrap();
    let windows = dir.path().join("windows.json");
    let entry = |id: &str| {
        format!(
            r#""{id}":{{"window":{{"min":1.0,"max":1.0}},"observed_min":1.0,"observed_max":1.0,"instances":[]}}"#
        )
    };
    let ids = [
        "large_set_hitting_vs_ti",
        "tmix_vs_ti",
        "ti_vs_ti_star",
        "tree_tmix_vs_ti",
        "tree_ti_vs_central_hitting",
    ];
    let body = ids.iter().map(|id| entry(id)).collect::<Vec<_>>().join(",");
    fs::write(
        &windows,
        format!(
            r#"{{"schema_version":1,"inflation":2.0,"seed":0,"samples":0,"windows":{{{body}}}}}"#
        ),
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = intersect(&[
        "harness",
        "run",
        "--suite",
        "trees",
        "--samples",
        "200",
        "--moment-samples",
        "200",
        "--windows",
        windows.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(1),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let reports: Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("reports.json")).unwrap()).unwrap();
    assert!(!reports.as_array().unwrap().is_empty());
    assert!(fs::read_to_string(out_dir.join("reports.csv"))
        .unwrap()
        .starts_with("instance,check"));
}

#[test]
fn unreadable_windows_file_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = intersect(&[
        "harness",
        "run",
        "--windows",
        dir.path().join("missing.json").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}
