use std::process::{Command, Output};

use rkconv::experiments::ExperimentResult;

fn rkconv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rkconv"))
        .args(args)
        .env_remove("RKCONV_WORKERS")
        .output()
        .expect("spawn rkconv")
}

const SMALL: [&str; 10] = ["--n", "30", "--d", "8", "--t", "4", "--reps", "3", "--seed", "21"];

#[test]
fn zero_sigma_exits_with_usage_error() {
    let out = rkconv(&["convergence", "--sigma-r", "0"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("--sigma-r"), "{err}");
}

#[test]
fn unknown_flag_and_help() {
    assert_eq!(rkconv(&["convergence", "--bogus"]).status.code(), Some(2));
    assert_eq!(rkconv(&["--help"]).status.code(), Some(0));
    assert_eq!(rkconv(&["deep-sizes", "--budget", "1", "--n1", "1"]).status.code(), Some(2));
}

#[test]
fn one_point_csv_has_header_and_one_row() {
    let mut args = vec!["convergence", "--sigma-r", "1", "--sigma-i", "0.5"];
    args.extend_from_slice(&SMALL);
    let out = rkconv(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], "sigma_r,sigma_i,L,L_std_err,diverged_fraction");
    let cells: Vec<f64> = lines[1].split(',').map(|c| c.parse().unwrap()).collect();
    assert_eq!(&cells[..2], &[1.0, 0.5]);
    assert!(cells[2] > 0.0 && cells[4] == 0.0);
}

#[test]
fn same_seed_gives_identical_bytes_for_any_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, workers: &str| {
        let path = dir.path().join(name);
        let mut args = vec![
            "convergence",
            "--grid-points",
            "3",
            "--leak",
            "0.5",
            "--workers",
            workers,
            "--output",
            path.to_str().unwrap(),
        ];
        args.extend_from_slice(&SMALL);
        let out = rkconv(&args);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read(path).unwrap()
    };
    let a = run("a.csv", "1");
    let b = run("b.csv", "1");
    let c = run("c.csv", "3");
    assert_eq!(a, b);
    assert_eq!(a, c);
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 10);
}

#[test]
fn json_output_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("check.json");
    let out = rkconv(&["kernel-check", "--samples", "20", "--output", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = String::from_utf8(out.stdout).unwrap();
    assert!(summary.contains("max |closed-form - quadrature|"), "{summary}");
    let text = std::fs::read_to_string(&path).unwrap();
    let result: ExperimentResult = serde_json::from_str(&text).unwrap();
    result.validate().unwrap();
    assert_eq!(result.rows(), 3);
    assert!(result.column("max_abs_diff").unwrap().iter().all(|&d| d <= 1e-8));
    assert_eq!(serde_json::to_string_pretty(&result).unwrap() + "\n", text);
}

#[test]
fn missing_output_directory_fails_before_running() {
    let out = rkconv(&["kernel-check", "--output", "/nonexistent-dir/out.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--output"));
}
