//! End-to-end CLI tests: exit codes, record layout, reproducibility.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

fn dclab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dclab"))
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("dclab-test-{tag}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_point_measure(dir: &Path, weight: f64) -> PathBuf {
    let path = dir.join("measure.json");
    fs::write(
        &path,
        format!(r#"{{"atoms":[{{"pos":[0.0,0.0,0.0],"weight":{weight}}}],"clouds":[]}}"#),
    )
    .unwrap();
    path
}

fn only_record(dir: &Path) -> serde_json::Value {
    let run_dir = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.is_dir())
        .expect("one run directory");
    let text = fs::read_to_string(run_dir.join("record.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn bounds_record_contains_analytic_values() {
    let dir = temp_dir("bounds");
    let status = dclab()
        .args(["--nu", "0.4", "--out"])
        .arg(&dir)
        .arg("bounds")
        .status()
        .unwrap();
    assert!(status.success());
    let record = only_record(&dir);
    let bound = record["results"]["lambda1_lower_bound"].as_f64().unwrap();
    let tix = record["results"]["tix_constant"].as_f64().unwrap();
    assert!((bound - 0.4706).abs() < 1e-4, "bound {bound}");
    assert!((tix - 0.9061).abs() < 1e-4, "tix {tix}");
    assert_eq!(record["command"], "bounds");
}

#[test]
fn radial_solve_writes_record_with_eigenvalue() {
    let dir = temp_dir("radial");
    let measure = write_point_measure(&dir, 0.5);
    let status = dclab()
        .arg("--measure")
        .arg(&measure)
        .arg("--out")
        .arg(&dir)
        .arg("radial")
        .status()
        .unwrap();
    assert!(status.success());
    let record = only_record(&dir);
    let lambda = record["results"]["lambda1"].as_f64().unwrap();
    assert!((lambda - 0.8660254).abs() < 1e-5, "lambda1 {lambda}");
    // Snapshot keeps the measure for reruns.
    assert_eq!(record["config"]["measure"]["atoms"][0]["weight"], 0.5);
}

#[test]
fn malformed_measure_exits_2_without_record() {
    let dir = temp_dir("malformed");
    let path = dir.join("bad.json");
    fs::write(&path, "{this is not json").unwrap();
    let out_dir = dir.join("runs");
    let output = dclab()
        .arg("--measure")
        .arg(&path)
        .arg("--out")
        .arg(&out_dir)
        .arg("solve")
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(
        !out_dir.exists(),
        "no record directory on validation failure"
    );
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("malformed"), "stderr: {stderr}");
}

#[test]
fn missing_nu_is_a_validation_error() {
    let dir = temp_dir("missing-nu");
    let output = dclab()
        .arg("--out")
        .arg(&dir)
        .arg("bounds")
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn supercritical_bounds_exit_2() {
    let dir = temp_dir("super");
    let output = dclab()
        .args(["--nu", "0.95", "--out"])
        .arg(&dir)
        .arg("bounds")
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn scan_writes_csv_and_report_merges_sorted() {
    let dir = temp_dir("scan");
    for distances in ["5.0", "2.0"] {
        let status = dclab()
            .args(["--nu", "0.6", "--grid-level", "1", "--basis-n", "8"])
            .arg("--out")
            .arg(&dir)
            .args(["scan", "--distances", distances])
            .status()
            .unwrap();
        assert!(status.success());
    }
    let run_dirs: Vec<PathBuf> = fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_dir())
        .collect();
    assert_eq!(run_dirs.len(), 2);
    for rd in &run_dirs {
        let csv = fs::read_to_string(rd.join("scan.csv")).unwrap();
        assert!(
            csv.starts_with("d,lambda1,residual,status"),
            "csv header: {csv}"
        );
    }

    let report_dir = dir.join("report");
    let mut cmd = dclab();
    cmd.arg("--out").arg(&report_dir).arg("report");
    for rd in &run_dirs {
        cmd.arg(rd.join("record.json"));
    }
    assert!(cmd.status().unwrap().success());
    let merged = fs::read_to_string(report_dir.join("report.csv")).unwrap();
    let lines: Vec<&str> = merged.lines().collect();
    assert_eq!(lines.len(), 3);
    let d0: f64 = lines[1].split(',').next().unwrap().parse().unwrap();
    let d1: f64 = lines[2].split(',').next().unwrap().parse().unwrap();
    assert!(d0 < d1, "merged rows must be sorted by d");
    assert!(report_dir.join("lambda_vs_d.dat").exists());
}

#[test]
fn report_rejects_empty_and_mixed_inputs() {
    let dir = temp_dir("report-empty");
    let output = dclab()
        .arg("--out")
        .arg(&dir)
        .arg("report")
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn coupling_sweep_report_carries_reference_columns() {
    let dir = temp_dir("sweep");
    let mut records = Vec::new();
    for (i, w) in [0.3, 0.6, 0.45].iter().enumerate() {
        let mdir = dir.join(format!("m{i}"));
        fs::create_dir_all(&mdir).unwrap();
        let measure = write_point_measure(&mdir, *w);
        assert!(dclab()
            .arg("--measure")
            .arg(&measure)
            .arg("--out")
            .arg(&mdir)
            .arg("radial")
            .status()
            .unwrap()
            .success());
        let run = fs::read_dir(&mdir)
            .unwrap()
            .map(|e| e.unwrap().path())
            .find(|p| p.is_dir())
            .unwrap();
        records.push(run.join("record.json"));
    }
    let report_dir = dir.join("report");
    let mut cmd = dclab();
    cmd.arg("--out").arg(&report_dir).arg("report");
    for r in &records {
        cmd.arg(r);
    }
    assert!(cmd.status().unwrap().success());
    let csv = fs::read_to_string(report_dir.join("report.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "nu,lambda1,conjecture_ref,bound");
    assert_eq!(lines.len(), 4);
    // rows sorted by nu; conjecture column = sqrt(1 - nu^2)
    let row: Vec<&str> = lines[1].split(',').collect();
    let nu: f64 = row[0].parse().unwrap();
    let conj: f64 = row[2].parse().unwrap();
    assert!((nu - 0.3).abs() < 1e-12);
    assert!((conj - (1.0_f64 - 0.09).sqrt()).abs() < 1e-12);
    let bound: f64 = row[3].parse().unwrap();
    assert!(bound > 0.0 && bound < 1.0);
    assert!(report_dir.join("lambda_vs_nu.dat").exists());
    assert!(report_dir.join("conjecture_ref.dat").exists());

    // Mixing scan and eigenvalue records is rejected.
    let sdir = dir.join("scanrec");
    assert!(dclab()
        .args(["--nu", "0.6", "--grid-level", "1", "--basis-n", "8"])
        .arg("--out")
        .arg(&sdir)
        .args(["scan", "--distances", "3.0"])
        .status()
        .unwrap()
        .success());
    let scan_record = fs::read_dir(&sdir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.is_dir())
        .unwrap()
        .join("record.json");
    let output = dclab()
        .arg("--out")
        .arg(dir.join("mixed"))
        .arg("report")
        .arg(&records[0])
        .arg(&scan_record)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn identical_config_reproduces_results_bitwise_across_threads() {
    let dir = temp_dir("repro");
    let measure = write_point_measure(&dir, 0.45);
    let mut results = Vec::new();
    for threads in ["1", "4"] {
        let out = dir.join(format!("t{threads}"));
        let status = dclab()
            .arg("--measure")
            .arg(&measure)
            .arg("--out")
            .arg(&out)
            .args([
                "--threads",
                threads,
                "--grid-level",
                "1",
                "--basis-n",
                "10",
                "--seed",
                "7",
            ])
            .arg("solve")
            .status()
            .unwrap();
        assert!(status.success());
        let record = only_record(&out);
        results.push(serde_json::to_string(&record["results"]).unwrap());
    }
    assert_eq!(
        results[0], results[1],
        "results subtree must be bitwise identical"
    );
}

#[test]
fn record_round_trips_through_json() {
    let dir = temp_dir("roundtrip");
    let measure = write_point_measure(&dir, 0.3);
    assert!(dclab()
        .arg("--measure")
        .arg(&measure)
        .arg("--out")
        .arg(&dir)
        .arg("radial")
        .status()
        .unwrap()
        .success());
    let record = only_record(&dir);
    let text = serde_json::to_string(&record).unwrap();
    let back: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(record, back);
}
