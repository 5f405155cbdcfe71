use std::path::Path;
use std::process::{Command, Output};

use ehrelay::experiment::output::{read_csv, CSV_HEADER};

fn ehrelay(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ehrelay"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn small_sweep_config(dir: &Path, out: &str) -> String {
    let body = format!(
        "epochs_m = 3000\nseed = 11\np_bar_grid_w = [0.3, 1, 10]\noutput_dir = \"{}\"\n",
        dir.join(out).display()
    );
    write_config(dir, &format!("{out}.cfg"), &body)
}

#[test]
fn sweep_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let first = ehrelay(&["sweep", "--config", &small_sweep_config(dir.path(), "a")]);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let second = ehrelay(&["sweep", "--config", &small_sweep_config(dir.path(), "b")]);
    assert!(second.status.success());
    let a = std::fs::read(dir.path().join("a/results.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b/results.csv")).unwrap();
    assert_eq!(a, b);
    let pa = std::fs::read(dir.path().join("a/plotdata.csv")).unwrap();
    let pb = std::fs::read(dir.path().join("b/plotdata.csv")).unwrap();
    assert_eq!(pa, pb);
}

#[test]
fn sweep_rows_respect_budget_and_units() {
    let dir = tempfile::tempdir().unwrap();
    let out = ehrelay(&["sweep", "--config", &small_sweep_config(dir.path(), "r")]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(dir.path().join("r/results.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), CSV_HEADER.join(","));
    let rows = read_csv(&dir.path().join("r/results.csv")).unwrap();
    assert_eq!(rows.len(), 9);
    for row in &rows {
        assert!(row.avg_power <= row.p_bar * (1.0 + 1e-6), "{row:?}");
        let bits = row.avg_rate_nats / std::f64::consts::LN_2;
        assert!((row.avg_rate_bits - bits).abs() <= 1e-11 * bits);
        assert_eq!((row.epochs_m, row.seed), (3000, 11));
    }
}

#[test]
fn config_errors_exit_with_usage_status() {
    let dir = tempfile::tempdir().unwrap();
    let negative = write_config(dir.path(), "neg.cfg", "p_bar_grid_w = [-1]\n");
    let out = ehrelay(&["sweep", "--config", &negative]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("p_bar_grid_w"));

    let unknown = write_config(dir.path(), "unk.cfg", "epochs_m = 10\nbandwidth = 1\n");
    let out = ehrelay(&["validate", "--config", &unknown]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    let fpta_only = write_config(dir.path(), "fpta.cfg", "schemes = [FPTA]\n");
    assert_eq!(ehrelay(&["sweep", "--config", &fpta_only]).status.code(), Some(2));

    let missing = dir.path().join("nope.cfg");
    assert_eq!(
        ehrelay(&["sweep", "--config", missing.to_str().unwrap()]).status.code(),
        Some(2)
    );
    assert_eq!(ehrelay(&["sweep"]).status.code(), Some(2));
    assert_eq!(ehrelay(&["solve-epoch", "--a", "1", "--y", "1", "--lambda", "-1"]).status.code(), Some(2));
}

#[test]
fn validate_with_single_epoch_skips_route_check() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "one.cfg", "epochs_m = 1\n");
    let out = ehrelay(&["validate", "--config", &cfg]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{stdout}");
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS")).count(), 3);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("SKIP")).count(), 1);
}

#[test]
fn solve_epoch_prints_the_joint_optimum() {
    let out = ehrelay(&["solve-epoch", "--a", "4", "--y", "10", "--lambda", "1"]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    let value = |key: &str| -> f64 {
        stdout
            .lines()
            .find_map(|l| l.strip_prefix(&format!("{key} ")))
            .expect("key printed")
            .parse()
            .unwrap()
    };
    assert!((value("tau_star") - 0.690328285221).abs() < 1e-9);
    assert!(stdout.contains("branch C1Max"));
    assert!(value("p_star") > 0.0);
}

#[test]
fn tau_search_reports_an_interior_optimum() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "t.cfg", "epochs_m = 5000\n");
    let out = ehrelay(&["tau-search", "--config", &cfg, "--p-bar", "1"]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    let tau0: f64 = stdout.lines().next().unwrap().strip_prefix("tau0 ").unwrap().parse().unwrap();
    assert!(tau0 > 0.05 && tau0 < 0.95, "{tau0}");
}
