use std::path::Path;
use std::process::{Command, Output};

fn lbt(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lbt")).args(args).arg("--out").arg(dir).output().unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn sidecar(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn validate_builtin_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = lbt(dir.path(), &["validate"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&dir.path().join("validate.csv"));
    assert_eq!(header, ["check", "severity", "passed", "residual"]);
    assert!(rows.iter().filter(|r| r[1] == "hard").all(|r| r[2] == "true"));
    let meta = sidecar(&dir.path().join("validate.json"));
    assert_eq!(meta["status"], "ok");
    assert_eq!(meta["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(meta["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn table_documents_are_read() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("quartic.json");
    std::fs::write(
        &table,
        r#"{"family":"custom","name":"quartic","nu0":2.5,"nu1":1.0,"nu3":-0.8,"omega1":6.283185307179586,"omega2":6.283185307179586,"N":1,"params":{"beta":0.25}}"#,
    )
    .unwrap();
    let out = lbt(dir.path(), &["validate", "--table", table.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn configuration_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"family\": \"trig\", \"nu0\": ").unwrap();
    assert_eq!(lbt(dir.path(), &["validate", "--table", bad.to_str().unwrap()]).status.code(), Some(2));
    let unknown = dir.path().join("unknown.json");
    std::fs::write(&unknown, r#"{"family":"custom","name":"nope","nu0":2,"nu1":1,"nu3":-1}"#).unwrap();
    assert_eq!(lbt(dir.path(), &["validate", "--table", unknown.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(lbt(dir.path(), &["no-such-command"]).status.code(), Some(2));
    assert_eq!(lbt(dir.path(), &["actions", "--k1", "0:1"]).status.code(), Some(2));
    assert_eq!(lbt(dir.path(), &["radon-scan", "--function", "sin:1"]).status.code(), Some(2));
    assert_eq!(lbt(dir.path(), &["conserve", "--tol", "-1"]).status.code(), Some(2));
}

#[test]
fn conserve_reports_small_drift() {
    let dir = tempfile::tempdir().unwrap();
    let out = lbt(dir.path(), &["conserve", "--bounces", "100", "--starts", "2", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&dir.path().join("conserve.csv"));
    let col = header.iter().position(|h| h == "max_drift").unwrap();
    assert_eq!(rows.len(), 2);
    for r in rows {
        assert!(r[col].parse::<f64>().unwrap() < 1e-7, "{r:?}");
    }
}

#[test]
fn numerical_failures_exit_three_with_the_point() {
    let dir = tempfile::tempdir().unwrap();
    // κ₁ > κ₂ is not a torus
    let out = lbt(dir.path(), &["freq-scan", "--k1", "0.5:0.5:1", "--k2", "0.2:0.2:1"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!dir.path().join("freq-scan.csv").exists());
    let meta = sidecar(&dir.path().join("freq-scan.json"));
    assert_eq!(meta["status"], "failed");
    assert_eq!(meta["failing_point"]["kappa1"], 0.5);
    assert_eq!(meta["failing_point"]["kappa2"], 0.2);
    let out = lbt(dir.path(), &["rational-orbit", "--p", "1", "--q", "0", "--n", "3"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn scans_have_one_row_per_grid_point_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let out = lbt(dir.path(), &["jacobian-scan", "--k1=-0.8:-0.2:3", "--k2", "0.2:0.8:2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&dir.path().join("jacobian-scan.csv"));
    assert_eq!(header.len(), 10);
    let keys: Vec<(String, String)> = rows.iter().map(|r| (r[0].clone(), r[1].clone())).collect();
    assert_eq!(
        keys,
        [("-0.8", "0.2"), ("-0.8", "0.8"), ("-0.5", "0.2"), ("-0.5", "0.8"), ("-0.2", "0.2"), ("-0.2", "0.8")]
            .map(|(a, b)| (a.to_string(), b.to_string()))
    );
    // shortest round-trip text parses back to the value it came from
    for r in &rows {
        for cell in &r[3..] {
            let v: f64 = cell.parse().unwrap();
            assert_eq!(format!("{v:?}"), *cell);
        }
    }
}

#[test]
fn radon_scan_of_a_constant_is_the_constant() {
    let dir = tempfile::tempdir().unwrap();
    let out = lbt(dir.path(), &["radon-scan", "--function", "const:2.5", "--k2", "0.3:1.5:3"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&dir.path().join("radon-scan.csv"));
    assert_eq!(header, ["kappa1", "kappa2", "case", "R_unit", "R_normal"]);
    assert_eq!(rows.len(), 12);
    for r in rows {
        assert!((r[3].parse::<f64>().unwrap() - 2.5).abs() < 1e-10);
    }
}

#[test]
fn seeds_change_trajectories() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(lbt(a.path(), &["trajectory", "--bounces", "3", "--seed", "1"]).status.success());
    assert!(lbt(b.path(), &["trajectory", "--bounces", "3", "--seed", "2"]).status.success());
    let (_, ra) = read_csv(&a.path().join("trajectory.csv"));
    let (_, rb) = read_csv(&b.path().join("trajectory.csv"));
    assert_eq!(ra.len(), 4);
    assert_ne!(ra, rb);
    let ha = sidecar(&a.path().join("trajectory.json"))["config_hash"].clone();
    let hb = sidecar(&b.path().join("trajectory.json"))["config_hash"].clone();
    assert_ne!(ha, hb);
}

#[test]
fn bad_thread_count_is_a_configuration_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_lbt"))
        .args(["rigidity", "--degree", "2", "--out"])
        .arg(dir.path())
        .env("LBT_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
