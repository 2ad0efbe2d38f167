use std::fs;
use std::path::Path;
use std::process::Command;

use vbtrack::config::Config;

fn vbtrack() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_vbtrack"));
    c.env_remove("VBTRACK_OUT");
    c
}

fn run_ok(c: &mut Command) -> String {
    let out = c.output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path).unwrap().records().map(|r| r.unwrap()).collect()
}

#[test]
fn default_matrix_writes_one_summary_row_per_variant() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(vbtrack().args(["run", "--runs", "3", "--metric-runs", "2", "--seed", "5", "--out"]).arg(dir.path()));
    for f in ["summary.csv", "timeseries.csv", "timing.csv", "metadata.csv"] {
        assert!(dir.path().join(f).is_file(), "{f} missing");
    }
    let summary = rows(&dir.path().join("summary.csv"));
    // 2 scenarios x 2 cases x 4 filters x 3 modes
    assert_eq!(summary.len(), 48);
    assert!(summary.iter().all(|r| r.len() == 20 && &r[4] == "3" && &r[5] == "2"));
    // variants whose metric runs were all lost have no series
    let surviving = summary.iter().filter(|r| &r[14] != "0").count();
    let series = rows(&dir.path().join("timeseries.csv"));
    assert!(surviving > 0);
    assert_eq!(series.len(), surviving * 361);
}

#[test]
fn reruns_are_byte_identical_regardless_of_threads() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["run", "--scenario", "2", "--case", "2", "--filter", "ukf,ghf", "--mode", "vb,mapmle", "--runs", "6", "--seed", "11"];
    run_ok(vbtrack().args(args).arg("--per-run").arg("--out").arg(a.path()));
    run_ok(vbtrack().args(args).args(["--per-run", "--threads", "1", "--out"]).arg(b.path()));
    for f in ["summary.csv", "timeseries.csv", "metadata.csv", "runs.csv"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f} differs");
    }
    assert_eq!(rows(&a.path().join("runs.csv")).len(), 2 * 2 * 6);
}

#[test]
fn environment_variable_sets_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("from-env");
    let stdout = run_ok(
        vbtrack()
            .env("VBTRACK_OUT", &target)
            .args(["run", "--scenario", "1", "--case", "1", "--filter", "ekf", "--mode", "nonadaptive", "--runs", "2"]),
    );
    assert!(stdout.contains("from-env"));
    assert_eq!(rows(&target.join("summary.csv")).len(), 1);
}

#[test]
fn trace_lists_every_step_of_the_chosen_run() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(
        vbtrack()
            .args(["run", "--scenario", "1", "--case", "1", "--filter", "ckf", "--mode", "vb-tuned", "--runs", "3", "--trace", "1"])
            .arg("--out")
            .arg(dir.path()),
    );
    let trace = rows(&dir.path().join("trace.csv"));
    assert_eq!(trace.len(), 361);
    assert!(trace.iter().all(|r| r[21].parse::<f64>().unwrap() >= 0.0));
}

#[test]
fn show_config_round_trips() {
    let text = run_ok(vbtrack().args(["show-config", "--scenario", "scenario2"]));
    let shown = Config::parse(&text).unwrap();
    assert_eq!(shown, Config::resolve("scenario2").unwrap());
}

#[test]
fn oracle_subcommand_passes() {
    let table = run_ok(vbtrack().arg("oracle"));
    assert_eq!(table.lines().count(), 9);
    assert!(!table.contains("FAIL"));
}

#[test]
fn bad_arguments_are_rejected() {
    for args in [&["run", "--bogus"][..], &["run", "--filter", "pf"], &["run", "--case", "3"], &["run", "--runs", "0"]] {
        let out = vbtrack().args(args).arg("--out").arg(std::env::temp_dir()).output().unwrap();
        assert!(!out.status.success(), "{args:?} accepted");
    }
}
