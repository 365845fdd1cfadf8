//! End-to-end runs of the `mkbell` binary: output shapes, exit codes, and
//! reproducibility.

use std::path::PathBuf;
use std::process::{Command, Output};

fn mkbell(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mkbell"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf8 stdout")
}

fn temp_file(name: &str, contents: &str) -> PathBuf {
    let path = std::env::temp_dir().join(format!("mkbell-test-{}-{name}", std::process::id()));
    std::fs::write(&path, contents).expect("write temp file");
    path
}

const GHZ3_SPEC: &str = r#"{"n":3,"kind":"blocks","partition":[3],"blocks":[{"type":"ghz"}]}"#;
const BELL_BLOCKS_SPEC: &str =
    r#"{"n":4,"kind":"blocks","partition":[2,2],"blocks":[{"type":"ghz"},{"type":"ghz"}]}"#;
const CHSH_SETTINGS: &str = r#"{"qubits":[
    {"a":[1,0,0],"ap":[0,1,0]},
    {"a":[0.7071067811865475,-0.7071067811865475,0],
     "ap":[0.7071067811865475,0.7071067811865475,0]}]}"#;

#[test]
fn partitions_table_for_four_qubits() {
    let out = mkbell(&["partitions", "4"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    // Header + 5 partitions + summary.
    assert_eq!(lines.len(), 7);
    let full = lines.iter().find(|l| l.starts_with("(4)")).expect("(4) row");
    let fields: Vec<&str> = full.split_whitespace().collect();
    assert_eq!(fields[1..6], ["1", "0", "4", "2", "32"]);
    assert!(text.contains("5 partitions, 3 entanglement classes"));
}

#[test]
fn partitions_trivial_and_ten() {
    let out = mkbell(&["partitions", "1"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).lines().count(), 2); // header + (1)

    let out = mkbell(&["partitions", "10"]);
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 44); // header + 42 rows + summary
    let row = text
        .lines()
        .find(|l| l.starts_with("(5,2,2,1)"))
        .expect("(5,2,2,1) row");
    let fields: Vec<&str> = row.split_whitespace().collect();
    // L K1 E S bound separable
    assert_eq!(fields[1..6], ["3", "1", "5", "7", "64"]);
}

#[test]
fn partitions_json_round_trips() {
    let out = mkbell(&["partitions", "4", "--json"]);
    assert!(out.status.success());
    let rows: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 5);
    assert_eq!(rows[0]["partition"], serde_json::json!([4]));
    assert_eq!(rows[0]["e"], 4);
    assert_eq!(rows[0]["quadratic_bound"], 32.0);
    assert_eq!(rows[4]["separable"], true);
}

#[test]
fn partitions_rejects_bad_n() {
    let out = mkbell(&["partitions", "0"]);
    assert_eq!(out.status.code(), Some(2));
    let out = mkbell(&["partitions", "65"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn mk_dump_base_and_three() {
    let out = mkbell(&["mk", "dump", "2"]);
    assert!(out.status.success());
    assert_eq!(
        stdout(&out),
        "00 1/2^0\n01 1/2^0\n10 1/2^0\n11 -1/2^0\n"
    );

    let out = mkbell(&["mk", "dump", "3"]);
    assert_eq!(
        stdout(&out),
        "001 1/2^0\n010 1/2^0\n100 1/2^0\n111 -1/2^0\n"
    );
}

#[test]
fn mk_check_reports_pass_per_split() {
    let out = mkbell(&["mk", "check", "6"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "k=2 PASS\nk=3 PASS\nk=4 PASS\n");

    let out = mkbell(&["mk", "check", "3"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("no valid splits"));

    let out = mkbell(&["mk", "check", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn classify_ghz3_certifies_full_entanglement() {
    let spec = temp_file("ghz3.json", GHZ3_SPEC);
    let out = mkbell(&["classify", "--state", spec.to_str().unwrap(), "--restarts", "8"]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["n"], 3);
    assert_eq!(report["certified_e_at_least"], 3);
    assert_eq!(report["separable_excluded"], true);
    assert!((report["best_quadratic"].as_f64().unwrap() - 16.0).abs() < 1e-4);
    let _ = std::fs::remove_file(spec);
}

#[test]
fn classify_bell_blocks_certifies_class_two() {
    let spec = temp_file("bell22.json", BELL_BLOCKS_SPEC);
    let out = mkbell(&["classify", "--state", spec.to_str().unwrap(), "--restarts", "8"]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["certified_e_at_least"], 2);
    assert!((report["best_quadratic"].as_f64().unwrap() - 8.0).abs() < 1e-5);
    assert_eq!(report["partitions_excluded"], serde_json::json!([]));
    let _ = std::fs::remove_file(spec);
}

#[test]
fn classify_with_settings_is_evaluation_only() {
    let spec = temp_file(
        "bell.json",
        r#"{"n":2,"kind":"amplitudes","re":[1,0,0,1]}"#,
    );
    let settings = temp_file("chsh.json", CHSH_SETTINGS);
    let out = mkbell(&[
        "classify",
        "--state",
        spec.to_str().unwrap(),
        "--settings",
        settings.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!((report["best_quadratic"].as_f64().unwrap() - 8.0).abs() < 1e-9);
    assert!((report["best_linear"].as_f64().unwrap() - 2.0 * 2.0f64.sqrt()).abs() < 1e-9);
    assert_eq!(report["separable_excluded"], true);
    // The supplied settings come back unchanged.
    assert_eq!(report["settings"]["qubits"][0]["a"], serde_json::json!([1.0, 0.0, 0.0]));
    let _ = std::fs::remove_file(spec);
    let _ = std::fs::remove_file(settings);
}

#[test]
fn classify_rejects_malformed_state() {
    let spec = temp_file("broken.json", r#"{"kind":"amplitudes","n":2,"re":[1,0]}"#);
    let out = mkbell(&["classify", "--state", spec.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let _ = std::fs::remove_file(spec);
}

#[test]
fn acc_separable_square_and_radii_sidecar() {
    let out = mkbell(&[
        "acc", "--n", "2", "--type", "separable", "--samples", "50", "--policy", "random",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("f,fprime,type,policy"));
    let mut rows = 0;
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), 4);
        let f: f64 = cols[0].parse().unwrap();
        let fp: f64 = cols[1].parse().unwrap();
        assert!(f.abs() <= 2.0 + 1e-9 && fp.abs() <= 2.0 + 1e-9);
        assert_eq!(cols[2], "separable");
        assert_eq!(cols[3], "random");
        rows += 1;
    }
    assert_eq!(rows, 50);
    // Radii overlay goes to stderr when stdout carries the CSV.
    let radii: serde_json::Value =
        serde_json::from_str(&String::from_utf8_lossy(&out.stderr)).unwrap();
    assert!((radii["2"].as_f64().unwrap() - 8.0f64.sqrt()).abs() < 1e-12);
}

#[test]
fn acc_optimized_bell_pair_hits_tsirelson_radius() {
    let out = mkbell(&[
        "acc", "--n", "2", "--type", "2", "--samples", "1", "--policy", "optimized",
        "--restarts", "8",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let row = text.lines().nth(1).expect("one data row");
    let cols: Vec<&str> = row.split(',').collect();
    let f: f64 = cols[0].parse().unwrap();
    let fp: f64 = cols[1].parse().unwrap();
    let radius = (f * f + fp * fp).sqrt();
    assert!((radius - 2.0 * 2.0f64.sqrt()).abs() < 1e-5, "radius {radius}");
}

#[test]
fn acc_out_writes_csv_and_sidecar() {
    let dir = std::env::temp_dir();
    let out_path = dir.join(format!("mkbell-test-{}-points.csv", std::process::id()));
    let out = mkbell(&[
        "acc", "--n", "3", "--type", "3,1", "--samples", "5", "--policy", "random",
        "--out", out_path.to_str().unwrap(),
    ]);
    // (3,1) does not sum to 3: usage error.
    assert_eq!(out.status.code(), Some(2));

    let out = mkbell(&[
        "acc", "--n", "4", "--type", "3,1", "--samples", "5", "--policy", "random",
        "--out", out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(&out_path).unwrap();
    assert_eq!(csv.lines().count(), 6);
    let sidecar = dir.join(format!("mkbell-test-{}-points.radii.json", std::process::id()));
    let radii: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&sidecar).unwrap()).unwrap();
    assert_eq!(radii.as_object().unwrap().len(), 3); // E = 2, 3, 4
    let _ = std::fs::remove_file(out_path);
    let _ = std::fs::remove_file(sidecar);
}

#[test]
fn acc_rejects_capacity() {
    let out = mkbell(&["acc", "--n", "11", "--type", "haar", "--samples", "5"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn runs_are_deterministic() {
    let args = ["acc", "--n", "3", "--type", "haar", "--samples", "20"];
    let a = mkbell(&args);
    let b = mkbell(&args);
    assert_eq!(stdout(&a), stdout(&b));
    // A different seed changes the sample.
    let mut seeded = args.to_vec();
    seeded.extend(["--seed", "1"]);
    let c = mkbell(&seeded);
    assert_ne!(stdout(&a), stdout(&c));
}

#[test]
fn unknown_flags_are_rejected() {
    let out = mkbell(&["partitions", "4", "--frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn thread_cap_env_var_is_validated() {
    let out = Command::new(env!("CARGO_BIN_EXE_mkbell"))
        .env("MKBELL_THREADS", "zero")
        .args(["partitions", "4"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    let out = Command::new(env!("CARGO_BIN_EXE_mkbell"))
        .env("MKBELL_THREADS", "1")
        .args(["partitions", "4"])
        .output()
        .unwrap();
    assert!(out.status.success());
}
