use std::fs;
use std::path::Path;
use std::process::Command;

use klshell::cli::{run, EXIT_OK, EXIT_USAGE};

fn run_in(dir: &Path, args: &[&str]) -> (i32, String, String) {
    let mut argv = vec!["klshell", "--out", dir.to_str().unwrap()];
    argv.extend_from_slice(args);
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn csv_rows(dir: &Path) -> Vec<csv::StringRecord> {
    let mut r = csv::Reader::from_path(dir.join("report.csv")).unwrap();
    r.records().map(|x| x.unwrap()).collect()
}

fn deflection(row: &csv::StringRecord, header: &csv::StringRecord) -> f64 {
    let i = header.iter().position(|h| h == "deflection").unwrap();
    row[i].parse().unwrap()
}

fn header(dir: &Path) -> csv::StringRecord {
    csv::Reader::from_path(dir.join("report.csv")).unwrap().headers().unwrap().clone()
}

#[test]
fn convergence_sweep_writes_one_row_per_level() {
    let d = tempfile::tempdir().unwrap();
    let (code, out, _) = run_in(d.path(), &["--benchmark", "strip", "--element", "cas", "--quad", "3", "--slenderness", "1e3", "--levels", "8"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(csv_rows(d.path()).len(), 8);
    assert_eq!(out.lines().count(), 8);
    assert!(out.lines().all(|l| l.starts_with("level ")));
    assert!(!d.path().join("field.dat").exists());
    assert!(!header(d.path()).iter().any(|h| h == "seconds"));
}

#[test]
fn explicit_mesh_reproduces_roof_deflection() {
    let d = tempfile::tempdir().unwrap();
    let (code, out, _) = run_in(
        d.path(),
        &["--benchmark", "scordelis", "--element", "cas", "--elements-per-side", "20", "--slenderness", "1e2", "--field-density", "5"],
    );
    assert_eq!(code, EXIT_OK, "{out}");
    let rows = csv_rows(d.path());
    let w = deflection(&rows[0], &header(d.path()));
    assert!((w / -0.30059 - 1.0).abs() <= 5e-3, "{w}");
    let field = fs::read_to_string(d.path().join("field.dat")).unwrap();
    assert_eq!(field.lines().filter(|l| !l.starts_with('#')).count(), 25);
}

#[test]
fn quadrature_choice_barely_changes_cas_deflection() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["--benchmark", "strip", "--element", "cas", "--slenderness", "100", "--levels", "6"];
    let mut two = args.to_vec();
    two.extend(["--quad", "2"]);
    assert_eq!(run_in(a.path(), &two).0, EXIT_OK);
    assert_eq!(run_in(b.path(), &args).0, EXIT_OK);
    let (ha, hb) = (header(a.path()), header(b.path()));
    for (x, y) in csv_rows(a.path()).iter().zip(csv_rows(b.path()).iter()) {
        let (p, q) = (deflection(x, &ha), deflection(y, &hb));
        assert!((p / q - 1.0).abs() < 0.01, "{p} vs {q}");
    }
}

#[test]
fn identical_configurations_give_identical_reports() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["--benchmark", "hypar", "--element", "cas", "--slenderness", "1e3", "--levels", "4"];
    assert_eq!(run_in(a.path(), &args).0, EXIT_OK);
    assert_eq!(run_in(b.path(), &args).0, EXIT_OK);
    assert_eq!(fs::read(a.path().join("report.csv")).unwrap(), fs::read(b.path().join("report.csv")).unwrap());
}

#[test]
fn timings_column_is_opt_in() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(run_in(d.path(), &["--benchmark", "strip", "--levels", "2", "--timings"]).0, EXIT_OK);
    assert_eq!(header(d.path()).iter().next_back(), Some("seconds"));
}

#[test]
fn bad_arguments_are_usage_errors() {
    let d = tempfile::tempdir().unwrap();
    for args in [
        vec!["--benchmark", "dome"],
        vec!["--benchmark", "strip", "--element", "mitc"],
        vec!["--benchmark", "strip", "--quad", "4"],
        vec!["--benchmark", "strip", "--levels", "0"],
        vec!["--benchmark", "strip", "--slenderness", "-3"],
        vec!["--benchmark", "scordelis", "--levels", "2", "--elements-per-side", "5"],
        vec!["--benchmark", "scordelis", "--elements-per-side", "10,5"],
        vec!["--element", "cas"],
    ] {
        let (code, _, err) = run_in(d.path(), &args);
        assert_eq!(code, EXIT_USAGE, "{args:?}");
        assert!(!err.is_empty());
    }
    assert!(!d.path().join("report.csv").exists());
}

#[test]
fn binary_reports_exit_codes() {
    let exe = env!("CARGO_BIN_EXE_klshell");
    let help = Command::new(exe).arg("--help").output().unwrap();
    assert_eq!(help.status.code(), Some(0));
    assert!(String::from_utf8(help.stdout).unwrap().contains("--elements-per-side"));
    let bad = Command::new(exe).args(["--benchmark", "nowhere"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    assert!(!bad.stderr.is_empty());
    let d = tempfile::tempdir().unwrap();
    let st = Command::new(exe)
        .args(["--benchmark", "hemisphere", "--levels", "2", "--out"])
        .arg(d.path())
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(0));
    assert_eq!(String::from_utf8(st.stdout).unwrap().lines().count(), 2);
}
