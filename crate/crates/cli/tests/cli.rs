use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bcp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bcp"))
        .args(args)
        .output()
        .expect("bcp runs")
}

fn arg(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn data_lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(str::to_string)
        .collect()
}

fn manifest(dir: &Path) -> String {
    fs::read_to_string(dir.join("manifest.txt")).unwrap()
}

#[test]
fn persistence_run_writes_one_row_per_observation() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("series.csv");
    fs::write(&input, "t,y\n1,1.0\n2,1.5\n3,0.5\n").unwrap();
    let out = dir.path().join("out");
    let res = bcp(&["run-csv", "--input", arg(&input), "--out-dir", arg(&out)]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));

    let rows = data_lines(&out.join("trace.csv"));
    assert_eq!(rows.len(), 3);
    // persistence: forecasts 0, 1.0, 1.5
    let y_hat: Vec<&str> = rows.iter().map(|r| r.split(',').nth(2).unwrap()).collect();
    assert_eq!(y_hat, ["0", "1", "1.5"]);
    assert!(manifest(&out).contains("command=run-csv"));
    assert!(manifest(&out).contains("rows=3"));
    assert!(out.join("metrics.csv").exists());
}

#[test]
fn zero_seeds_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let res = bcp(&["changepoint", "--seeds", "0", "--out-dir", arg(dir.path())]);
    assert_eq!(res.status.code(), Some(1));
}

#[test]
fn gradient_updater_needs_eta() {
    let dir = tempfile::tempdir().unwrap();
    let res = bcp(&[
        "changepoint",
        "--updater",
        "ogd",
        "--seeds",
        "2",
        "--out-dir",
        arg(dir.path()),
    ]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("--eta"));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    assert_eq!(bcp(&["probe", "--bogus"]).status.code(), Some(1));
}

#[test]
fn probe_rejects_alpha_at_or_above_half() {
    let dir = tempfile::tempdir().unwrap();
    for alpha in ["0.6", "0.5"] {
        let res = bcp(&["probe", "--alpha", alpha, "--out-dir", arg(dir.path())]);
        assert_eq!(res.status.code(), Some(1), "alpha {alpha}");
    }
}

#[test]
fn flipper_probe_passes() {
    let dir = tempfile::tempdir().unwrap();
    let res = bcp(&[
        "probe",
        "--d",
        "1",
        "--alpha",
        "0.1",
        "--t",
        "10000",
        "--adversary",
        "flipper",
        "--out-dir",
        arg(dir.path()),
    ]);
    assert!(res.status.success());
    assert!(String::from_utf8_lossy(&res.stdout).contains("status=pass"));
    let report = fs::read_to_string(dir.path().join("probe.csv")).unwrap();
    assert!(!report.contains(",fail,"));
    assert_eq!(data_lines(&dir.path().join("probe_rows.csv")).len(), 10_000);
}

#[test]
fn unbounded_probe_reports_full_miscoverage() {
    let dir = tempfile::tempdir().unwrap();
    let res = bcp(&[
        "probe",
        "--adversary",
        "unbounded",
        "--t",
        "2000",
        "--out-dir",
        arg(dir.path()),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    assert!(String::from_utf8_lossy(&res.stdout).contains("miscoverage=1\n"));
    let report = fs::read_to_string(dir.path().join("probe.csv")).unwrap();
    let row = report.lines().find(|l| l.starts_with("miscoverage")).unwrap();
    assert!(row.contains("expected_by_necessity_argument"), "{row}");
}

#[test]
fn changepoint_writes_summary_rolling_and_traces() {
    let dir = tempfile::tempdir().unwrap();
    let res = bcp(&[
        "changepoint",
        "--updater",
        "kt",
        "--updater",
        "ogd",
        "--eta",
        "1,4",
        "--seeds",
        "3",
        "--traces",
        "--out-dir",
        arg(dir.path()),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let summary = data_lines(&dir.path().join("summary.csv"));
    assert_eq!(summary.len(), 3);
    assert!(summary[0].starts_with("kt,"));
    assert!(dir.path().join("traces/seed2_ogd_eta4.csv").exists());
    assert_eq!(data_lines(&dir.path().join("traces/seed0_kt.csv")).len(), 2000);
    assert!(manifest(dir.path()).contains("seeds=3"));

    // deterministic given flags
    let again = tempfile::tempdir().unwrap();
    bcp(&[
        "changepoint",
        "--updater",
        "kt",
        "--updater",
        "ogd",
        "--eta",
        "1,4",
        "--seeds",
        "3",
        "--out-dir",
        arg(again.path()),
    ]);
    assert_eq!(
        fs::read(dir.path().join("summary.csv")).unwrap(),
        fs::read(again.path().join("summary.csv")).unwrap()
    );
}

#[test]
fn malformed_row_is_a_data_error_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("bad.csv");
    fs::write(&input, "t,y\n1,1.0\n2,oops\n").unwrap();
    let res = bcp(&["run-csv", "--input", arg(&input), "--out-dir", arg(dir.path())]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("line 3"));
}

#[test]
fn trace_replays_through_fixed_radius_in_scores_mode() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("series.csv");
    let mut body = String::from("t,y\n");
    for i in 0..200 {
        body.push_str(&format!("{},{}\n", i + 1, ((i * 37) % 17) as f64 / 4.0));
    }
    fs::write(&input, body).unwrap();
    let first = dir.path().join("first");
    assert!(bcp(&["run-csv", "--input", arg(&input), "--out-dir", arg(&first)])
        .status
        .success());

    let trace = first.join("trace.csv");
    let rows = data_lines(&trace);
    let fields = |r: &String, i: usize| r.split(',').nth(i).unwrap().to_string();
    // a single fixed radius reproduces the flags of the rows that used it
    let pick = &rows[120];
    let radius = fields(pick, 4);
    let second = dir.path().join("second");
    let res = bcp(&[
        "run-csv",
        "--input",
        arg(&trace),
        "--scores-only",
        "--updater",
        "fixed",
        "--fixed-radius",
        &radius,
        "--out-dir",
        arg(&second),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let fixed = data_lines(&second.join("trace.csv"));
    assert_eq!(fixed.len(), rows.len());
    for (orig, rep) in rows.iter().zip(&fixed) {
        assert_eq!(fields(orig, 3), fields(rep, 3), "scores survive the round trip");
        if fields(orig, 4) == radius {
            assert_eq!(fields(orig, 7), fields(rep, 7));
        }
    }

    // replaying every recorded radius reproduces every flag
    let third = dir.path().join("third");
    let res = bcp(&[
        "run-csv",
        "--input",
        arg(&trace),
        "--scores-only",
        "--replay-radii",
        "--out-dir",
        arg(&third),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let replay = data_lines(&third.join("trace.csv"));
    assert_eq!(replay.len(), rows.len());
    for (orig, rep) in rows.iter().zip(&replay) {
        assert_eq!(fields(orig, 4), fields(rep, 4));
        assert_eq!(fields(orig, 7), fields(rep, 7));
    }
}

#[test]
fn scores_only_uniform_stream_reaches_target_coverage() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("scores.csv");
    let mut body = String::from("t,score\n");
    // Weyl sequence: equidistributed on [0, 1)
    let step = (5f64.sqrt() - 1.0) / 2.0;
    for i in 0..100_000u32 {
        body.push_str(&format!("{},{}\n", i + 1, (f64::from(i) * step).fract()));
    }
    fs::write(&input, body).unwrap();
    let out = dir.path().join("out");
    let res = bcp(&[
        "run-csv",
        "--input",
        arg(&input),
        "--scores-only",
        "--out-dir",
        arg(&out),
    ]);
    assert!(res.status.success());
    let metrics = data_lines(&out.join("metrics.csv"));
    let coverage: f64 = metrics[0].split(',').nth(2).unwrap().parse().unwrap();
    assert!((coverage - 0.9).abs() <= 0.01, "coverage {coverage}");
}

#[test]
fn multi_horizon_ar_reports_each_step() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("series.csv");
    let mut body = String::from("t,y\n");
    let mut y = 0.0f64;
    for i in 0..600u32 {
        y = 0.7 * y + (f64::from(i) * 0.9).sin();
        body.push_str(&format!("{},{y}\n", i + 1));
    }
    fs::write(&input, body).unwrap();
    let res = bcp(&[
        "run-csv",
        "--input",
        arg(&input),
        "--forecaster",
        "ar3",
        "--horizon",
        "5",
        "--out-dir",
        arg(dir.path()),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let metrics = data_lines(&dir.path().join("metrics.csv"));
    let steps: Vec<&str> = metrics.iter().map(|r| r.split(',').next().unwrap()).collect();
    assert_eq!(steps, ["1", "2", "3", "4", "5", "all"]);
    assert!(manifest(dir.path()).contains("refit_every=5"));
}

#[test]
fn replay_needs_scores_only() {
    let res = bcp(&["run-csv", "--input", "x.csv", "--replay-radii"]);
    assert_eq!(res.status.code(), Some(1));
}

#[test]
fn horizon_requires_ar_forecaster() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("series.csv");
    fs::write(&input, "t,y\n1,1\n2,2\n").unwrap();
    let res = bcp(&[
        "run-csv",
        "--input",
        arg(&input),
        "--horizon",
        "3",
        "--out-dir",
        arg(dir.path()),
    ]);
    assert_eq!(res.status.code(), Some(1));
}
