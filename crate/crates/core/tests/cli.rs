use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn vread(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vread"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> Value {
    let out = vread(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn error_of(out: &Output) -> Value {
    serde_json::from_str(String::from_utf8_lossy(&out.stderr).lines().last().unwrap()).unwrap()
}

fn json_file(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const SMALL_LOG: &str = "\
u1,i1,1700000000,1,20.5
u1,i2,1700000100,0,0
u2,i1,1700000200,1,3
u2,i2,1700000300,1,45
";

fn simulate_small(dir: &Path) {
    ok(dir, &["--seed", "3", "simulate", "--n-users", "60", "--n-items", "20", "--out", "log.csv", "--sidecar", "truth.csv"]);
}

#[test]
fn fit_stats_counts_clicks() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("log.csv"), SMALL_LOG).unwrap();
    let summary = ok(dir.path(), &["fit-stats", "--log", "log.csv", "--out", "stats.json"]);
    assert_eq!(summary["status"], "ok");
    assert_eq!(summary["command"], "fit-stats");
    let stats = json_file(&dir.path().join("stats.json"));
    assert_eq!(stats["n"], 3);
    let (x_l, x_h) = (stats["x_l"].as_f64().unwrap(), stats["x_h"].as_f64().unwrap());
    assert!(x_l < x_h);
}

#[test]
fn header_flag_skips_first_line() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("user_id,item_id,timestamp,clicked,dwell_time_s\n{SMALL_LOG}");
    fs::write(dir.path().join("log.csv"), text).unwrap();
    let out = vread(dir.path(), &["fit-stats", "--log", "log.csv", "--out", "stats.json"]);
    assert_eq!(out.status.code(), Some(1));
    ok(dir.path(), &["--header", "fit-stats", "--log", "log.csv", "--out", "stats.json"]);
}

#[test]
fn missing_profiles_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("log.csv"), SMALL_LOG).unwrap();
    ok(dir.path(), &["fit-stats", "--log", "log.csv", "--out", "stats.json"]);
    let out = vread(
        dir.path(),
        &["label", "--log", "log.csv", "--stats", "stats.json", "--profiles", "nope.bin", "--out", "labeled.csv"],
    );
    assert_eq!(out.status.code(), Some(1));
    let err = error_of(&out);
    assert_eq!(err["status"], "error");
    assert_eq!(err["reason"], "missing-input:profiles");
    assert!(!dir.path().join("labeled.csv").exists());
}

#[test]
fn malformed_line_fails_unless_budgeted() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("log.csv"), format!("{SMALL_LOG}garbage line\n")).unwrap();
    let out = vread(dir.path(), &["fit-stats", "--log", "log.csv", "--out", "stats.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(error_of(&out)["reason"].as_str().unwrap().starts_with("parse"));
    ok(dir.path(), &["--bad-line-budget", "1", "fit-stats", "--log", "log.csv", "--out", "stats.json"]);
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = vread(dir.path(), &["train", "--objective", "nonsense"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_of(&out)["reason"], "usage");
}

#[test]
fn version_lists_formats() {
    let dir = tempfile::tempdir().unwrap();
    let out = vread(dir.path(), &["--version"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with(&format!("vread {}", env!("CARGO_PKG_VERSION"))));
    assert!(text.contains("checkpoint VRMT"));
    assert!(text.contains("profile-store VRPF"));
}

#[test]
fn full_pipeline_gives_finite_auc() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    simulate_small(d);
    ok(d, &["fit-stats", "--log", "log.csv", "--out", "stats.json"]);
    ok(d, &["stats-report", "--log", "log.csv", "--bins", "20", "--out", "hist.csv"]);
    ok(d, &["build-profiles", "--log", "log.csv", "--out", "profiles.bin"]);
    ok(
        d,
        &[
            "label", "--log", "log.csv", "--stats", "stats.json", "--profiles", "profiles.bin", "--out", "labeled.csv",
            "--composition", "composition.json",
        ],
    );
    ok(d, &["ndt-params", "--source", "solved", "--stats", "stats.json", "--out", "ndt.json"]);
    for (obj, out) in [("vr_ndt", "model.bin"), ("single_ctr", "base.bin")] {
        ok(
            d,
            &[
                "train", "--labeled", "labeled.csv", "--ndt", "ndt.json", "--objective", obj, "--epochs", "1",
                "--out", out, "--loss-trace", "loss.csv",
            ],
        );
    }
    ok(
        d,
        &[
            "eval", "--labeled", "labeled.csv", "--checkpoint", "model.bin", "--baseline-checkpoint", "base.bin",
            "--out", "eval.json",
        ],
    );
    let eval = json_file(&d.join("eval.json"));
    let auc = eval["auc"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&auc));
    assert!(eval["base_auc"].as_f64().is_some());
    assert_eq!(eval["objective"], "vr_ndt");

    let hist = fs::read_to_string(d.join("hist.csv")).unwrap();
    assert_eq!(hist.lines().count(), 21);
    let comp = json_file(&d.join("composition.json"));
    assert!(comp["composition"]["total"].as_u64().unwrap() > 0);
    let labeled = fs::read_to_string(d.join("labeled.csv")).unwrap();
    let log = fs::read_to_string(d.join("log.csv")).unwrap();
    assert_eq!(labeled.lines().count(), log.lines().count() + 1);
    let trace = fs::read_to_string(d.join("loss.csv")).unwrap();
    assert_eq!(trace.lines().count(), 3);
}

#[test]
fn rerun_overwrites_with_identical_output() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    simulate_small(d);
    let first = fs::read(d.join("log.csv")).unwrap();
    simulate_small(d);
    assert_eq!(first, fs::read(d.join("log.csv")).unwrap());
    ok(d, &["build-profiles", "--log", "log.csv", "--out", "p1.bin"]);
    ok(d, &["build-profiles", "--log", "log.csv", "--out", "p2.bin"]);
    assert_eq!(fs::read(d.join("p1.bin")).unwrap(), fs::read(d.join("p2.bin")).unwrap());
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("log.csv"), SMALL_LOG).unwrap();
    fs::write(
        d.join("vread.toml"),
        "seed = 5\n[paths]\nlog = \"log.csv\"\nstats = \"from_config.json\"\n",
    )
    .unwrap();
    ok(d, &["--config", "vread.toml", "fit-stats"]);
    assert_eq!(json_file(&d.join("from_config.json"))["seed"], 5);
    ok(d, &["--config", "vread.toml", "--seed", "9", "fit-stats", "--out", "from_flag.json"]);
    assert_eq!(json_file(&d.join("from_flag.json"))["seed"], 9);
}

#[test]
fn migrate_report_on_identical_logs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    simulate_small(d);
    ok(
        d,
        &["migrate-report", "--baseline", "log.csv", "--treatment", "log.csv", "--pct", "--out", "migration.csv"],
    );
    let text = fs::read_to_string(d.join("migration.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "level,decile,mean_base,mean_treat,delta,delta_pct");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 70);
    for row in rows {
        let delta = row.split(',').nth(4).unwrap();
        assert!(delta == "NA" || delta.parse::<f64>().unwrap() == 0.0, "{row}");
    }
}
