use std::path::Path;
use std::process::{Command, Output};

use spinbus::protocols::Cell;
use spinbus_cli::output::read_result;

fn spinbus(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spinbus"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(
        o.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn num(c: &Cell) -> f64 {
    match c {
        Cell::Num(x) => *x,
        Cell::Int(k) => *k as f64,
        Cell::Text(s) => panic!("expected a number, got `{s}`"),
    }
}

fn col(r: &spinbus::protocols::ExperimentResult, name: &str) -> usize {
    r.columns
        .iter()
        .position(|c| c == name)
        .unwrap_or_else(|| panic!("no column {name}"))
}

#[test]
fn modes_example_has_closed_form_energies() {
    let text = stdout(&spinbus(&[
        "modes",
        "--N",
        "5",
        "--kappa",
        "26kHz",
        "--g-over-kappa",
        "0.2",
    ]));
    let r = read_result(&text).unwrap();
    r.provenance.validate().unwrap();
    let e = col(&r, "E_over_kappa");
    let got: Vec<f64> = r.rows.iter().map(|row| num(&row[e])).collect();
    let s3 = 3f64.sqrt();
    let want = [s3, 1.0, 0.0, -1.0, -s3];
    assert_eq!(got.len(), 5);
    for (g, w) in got.iter().zip(want) {
        assert!((g - w).abs() < 1e-10, "{got:?}");
    }
}

#[test]
fn validation_failures_exit_two() {
    let o = spinbus(&["modes", "--N", "0"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("N must be at least 1"), "{err}");

    let o = spinbus(&["modes", "--N", "3", "--kapa", "26kHz"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown key `kapa`"));

    let o = spinbus(&[
        "entangle",
        "--N",
        "3",
        "--noise",
        "t2",
        "--coherence",
        "3.2",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn entanglement_vanishes_at_the_classical_threshold() {
    let text = stdout(&spinbus(&[
        "entangle",
        "--N",
        "3",
        "--g-over-kappa",
        "0.0577",
        "--noise",
        "t2",
        "--coherence",
        "3.2ms",
    ]));
    let r = read_result(&text).unwrap();
    let e = col(&r, "eof");
    let max = r.rows.iter().map(|row| num(&row[e])).fold(0.0, f64::max);
    assert!(max < 1e-2, "max E_F {max}");
}

#[test]
fn result_files_round_trip_in_both_formats() {
    let dir = tempfile::tempdir().unwrap();
    for fmt in ["csv", "json"] {
        let path = dir.path().join(format!("t.{fmt}"));
        let p = path.to_str().unwrap();
        let o = spinbus(&[
            "transfer", "--N", "2", "--points", "40", "--format", fmt, "--output", p,
        ]);
        assert!(o.status.success());
        assert!(o.stdout.is_empty());
        let text = std::fs::read_to_string(&path).unwrap();
        let r = read_result(&text).unwrap();
        r.provenance.validate().unwrap();
        assert_eq!(r.rows.len(), 40);
        assert_eq!(
            r.columns,
            ["tau_core", "tau_s", "fidelity_sq", "correction"]
        );
        if fmt == "csv" {
            assert!(text.lines().any(|l| l.starts_with("# config_sha256: ")));
            assert!(text.lines().any(|l| l == "# unit_convention: cyclic"));
        }
    }
    let names: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    assert_eq!(names.len(), 2);
}

#[test]
fn fixed_step_runs_are_byte_identical() {
    let args = [
        "entangle",
        "--N",
        "3",
        "--noise",
        "t1",
        "--coherence",
        "2ms",
        "--method",
        "rk4",
        "--max-step",
        "0.05",
        "--points",
        "50",
    ];
    let a = stdout(&spinbus(&args));
    let b = stdout(&spinbus(&args));
    assert_eq!(a, b);
}

#[test]
fn config_file_values_yield_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# chain\nn = 4\ng-over-kappa = 0.2\n").unwrap();
    let c = cfg.to_str().unwrap();
    let r = read_result(&stdout(&spinbus(&["modes", "--config", c]))).unwrap();
    assert_eq!(r.rows.len(), 4);
    let r = read_result(&stdout(&spinbus(&["modes", "--config", c, "--n", "6"]))).unwrap();
    assert_eq!(r.rows.len(), 6);
}

fn sweep_rows_match_single(
    sweep: &spinbus::protocols::ExperimentResult,
    single: &spinbus::protocols::ExperimentResult,
) {
    let offset = col(sweep, "point_status") + 1;
    assert_eq!(sweep.rows.len(), single.rows.len());
    for (a, b) in sweep.rows.iter().zip(&single.rows) {
        assert_eq!(&a[offset..offset + b.len()], &b[..]);
    }
    assert_eq!(
        &sweep.columns[offset..offset + single.columns.len()],
        &single.columns[..]
    );
}

#[test]
fn one_point_sweep_matches_a_single_run() {
    let single = read_result(&stdout(&spinbus(&[
        "modes",
        "--N",
        "4",
        "--g-over-kappa",
        "0.3",
    ])))
    .unwrap();
    let sweep = read_result(&stdout(&spinbus(&[
        "sweep",
        "--experiment",
        "modes",
        "--g-over-kappa",
        "0.3",
        "--sweep",
        "n=4",
    ])))
    .unwrap();
    sweep.provenance.validate().unwrap();
    sweep_rows_match_single(&sweep, &single);
    assert!(sweep
        .rows
        .iter()
        .all(|r| r[col(&sweep, "point_status")] == Cell::Text("ok".into())));
}

fn sweep_args<'a>(out: &'a str, extra: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec![
        "sweep",
        "--experiment",
        "entangle",
        "--noise",
        "t1",
        "--coherence",
        "5ms",
        "--points",
        "30",
        "--method",
        "rk4",
        "--max-step",
        "0.05",
        "--sweep",
        "n=1,2,3",
        "--workers",
        "2",
        "--output",
        out,
    ];
    v.extend_from_slice(extra);
    v
}

#[test]
fn resumed_sweep_equals_uninterrupted_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let whole = dir.path().join("whole.csv");
    let parts = dir.path().join("parts.csv");
    let w = whole.to_str().unwrap();
    let p = parts.to_str().unwrap();
    assert!(spinbus(&sweep_args(w, &[])).status.success());

    assert!(spinbus(&sweep_args(p, &["--limit", "1"])).status.success());
    let partial = std::fs::read_to_string(&parts).unwrap();
    assert!(partial.starts_with("# spinbus-sweep partial"));
    assert!(spinbus(&sweep_args(p, &["--limit", "1"])).status.success());
    assert!(spinbus(&sweep_args(p, &[])).status.success());

    let a = std::fs::read(&whole).unwrap();
    let b = std::fs::read(&parts).unwrap();
    assert_eq!(a, b);
    let r = read_result(&String::from_utf8(a).unwrap()).unwrap();
    r.provenance.validate().unwrap();
    assert_eq!(r.summary["points"], Cell::Int(3));

    // a finished file with a different config is not silently replaced
    let o = spinbus(&[
        "sweep",
        "--experiment",
        "modes",
        "--sweep",
        "n=2",
        "--output",
        w,
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(std::fs::read(&whole).unwrap(), b);
    let o = spinbus(&[
        "sweep",
        "--experiment",
        "modes",
        "--sweep",
        "n=2",
        "--output",
        w,
        "--restart",
    ]);
    assert!(o.status.success());
}

#[test]
fn failed_points_are_marked_without_aborting() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    // a non-vacuum chain is valid in general but unsupported by the subspace engine
    let o = spinbus(&[
        "sweep",
        "--experiment",
        "entangle",
        "--engine",
        "subspace",
        "--n",
        "2",
        "--points",
        "20",
        "--sweep",
        "chain-init=00,01",
        "--output",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_result(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let st = col(&r, "point_status");
    let ok = r
        .rows
        .iter()
        .filter(|row| row[st] == Cell::Text("ok".into()))
        .count();
    let failed: Vec<_> = r
        .rows
        .iter()
        .filter(|row| row[st] == Cell::Text("failed".into()))
        .collect();
    assert_eq!(ok, 20);
    assert_eq!(failed.len(), 1);
    assert_eq!(r.summary["failed_points"], Cell::Int(1));
    let err = col(&r, "point_error");
    assert!(matches!(&failed[0][err], Cell::Text(s) if !s.is_empty()));
}

#[test]
fn sweep_columns_are_unique() {
    let o = spinbus(&[
        "sweep",
        "--experiment",
        "ft-threshold",
        "--noise",
        "t2",
        "--sweep",
        "n=3",
        "--limit",
        "0",
        "--output",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ft.csv");
    let o = spinbus(&[
        "sweep",
        "--experiment",
        "ft-threshold",
        "--noise",
        "t2",
        "--sweep",
        "n=3,5",
        "--sweep",
        "g-over-kappa=weak,0.1:1:0.1",
        "--limit",
        "0",
        "--output",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("22 points"));
    let text = std::fs::read_to_string(&out).unwrap();
    let cols = text
        .lines()
        .find_map(|l| l.strip_prefix("# columns: "))
        .unwrap();
    let cols: Vec<_> = cols.split(',').collect();
    let mut uniq = cols.clone();
    uniq.sort();
    uniq.dedup();
    assert_eq!(uniq.len(), cols.len(), "{cols:?}");
}

#[test]
fn sweep_log_reports_cost_before_running() {
    let o = spinbus(&[
        "sweep",
        "--experiment",
        "modes",
        "--sweep",
        "n=2,3",
        "--sweep",
        "g-over-kappa=0.1:0.3:0.1",
    ]);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(o.status.success());
    assert!(err.contains("sweep: 6 points over 2 axes"), "{err}");
    assert!(err.contains("estimated cost"));
    let r = read_result(&String::from_utf8(o.stdout).unwrap()).unwrap();
    assert_eq!(r.rows.len(), 2 * 3 + 3 * 3);
}

#[test]
fn nothing_is_written_beside_the_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("only.csv");
    let o = Command::new(env!("CARGO_BIN_EXE_spinbus"))
        .current_dir(dir.path())
        .args([
            "sweep",
            "--experiment",
            "modes",
            "--sweep",
            "n=2,3",
            "--output",
            out.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(o.status.success());
    let names: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    assert_eq!(names, vec![Path::new(&out).to_path_buf()]);
}
