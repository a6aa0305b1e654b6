use std::path::Path;
use std::process::{Command, Output};

use zxz_synth::numerics::{haar_random_unitary, identity, write_unitary_json};

fn zxz(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zxz")).args(args).output().expect("binary runs")
}

fn write_unitary(dir: &Path, name: &str, n: usize, seed: u64) -> String {
    let path = dir.join(name);
    std::fs::write(&path, write_unitary_json(&haar_random_unitary(n, seed).unwrap()).unwrap()).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn transpile_random_on_garnet() {
    let dir = tempfile::tempdir().unwrap();
    let qasm = dir.path().join("out.qasm");
    let summary = dir.path().join("summary.json");
    let out = zxz(&[
        "transpile", "--random", "3", "--seed", "1", "--topology", "garnet",
        "--out", qasm.to_str().unwrap(), "--summary", summary.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let s: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&summary).unwrap()).unwrap();
    let cx = s["cnot_count"].as_u64().unwrap();
    assert!((23..=31).contains(&cx), "cnot_count {cx}");
    for key in ["depth", "runtime_ms", "n_qubits", "topology", "placement"] {
        assert!(s.get(key).is_some(), "missing {key}");
    }
    assert!(std::fs::read_to_string(&qasm).unwrap().starts_with("OPENQASM 2.0;"));
}

#[test]
fn transpile_verify_exit_zero() {
    let out = zxz(&["transpile", "--random", "2", "--seed", "5", "--topology", "complete:2", "--verify"]);
    assert_eq!(out.status.code(), Some(0));
    let s: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(s["residual"].as_f64().unwrap() <= 4e-8);
    assert_eq!(s["verified"], serde_json::Value::Bool(true));
}

#[test]
fn malformed_unitary_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("malformed.json");
    std::fs::write(&bad, "{\"n_qubits\": 2, \"matrix\": [[").unwrap();
    let out = zxz(&["transpile", "--unitary", bad.to_str().unwrap(), "--topology", "garnet"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn coupling_file_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let cm = dir.path().join("map.json");
    std::fs::write(&cm, r#"{"name": "tri", "num_qubits": 3, "edges": [[0, 1], [1, 2]]}"#).unwrap();
    let u = write_unitary(dir.path(), "u.json", 3, 2);
    let out = zxz(&["transpile", "--unitary", &u, "--coupling", cm.to_str().unwrap(), "--verify"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn verify_round_trip_and_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let u = write_unitary(dir.path(), "u.json", 3, 9);
    let qasm = dir.path().join("c.qasm");
    let out = zxz(&["transpile", "--unitary", &u, "--topology", "line:5", "--out", qasm.to_str().unwrap()]);
    assert!(out.status.success());
    let ok = zxz(&["verify", "--qasm", qasm.to_str().unwrap(), "--unitary", &u]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("PASS"));

    let text = std::fs::read_to_string(&qasm).unwrap();
    let line = text.lines().find(|l| l.starts_with("rz(")).unwrap();
    let operand = &line[line.find(')').unwrap()..];
    let corrupted = text.replacen(line, &format!("rz(1.2345{operand}"), 1);
    assert_ne!(corrupted, text);
    let bad = dir.path().join("bad.qasm");
    std::fs::write(&bad, corrupted).unwrap();
    let fail = zxz(&["verify", "--qasm", bad.to_str().unwrap(), "--unitary", &u]);
    assert_eq!(fail.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&fail.stdout).contains("FAIL"));
}

#[test]
fn verify_identity_against_empty_circuit() {
    let dir = tempfile::tempdir().unwrap();
    let u = dir.path().join("id.json");
    std::fs::write(&u, write_unitary_json(&identity(4)).unwrap()).unwrap();
    let qasm = dir.path().join("empty.qasm");
    std::fs::write(&qasm, "OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[2];\n").unwrap();
    let out = zxz(&["verify", "--qasm", qasm.to_str().unwrap(), "--unitary", u.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("residual 0e0"));
}

#[test]
fn verify_rejects_oversized_register() {
    let dir = tempfile::tempdir().unwrap();
    let u = dir.path().join("id.json");
    std::fs::write(&u, write_unitary_json(&identity(2)).unwrap()).unwrap();
    let qasm = dir.path().join("wide.qasm");
    let gates: String = (0..13).map(|q| format!("h q[{q}];\n")).collect();
    std::fs::write(&qasm, format!("OPENQASM 2.0;\nqreg q[13];\n{gates}")).unwrap();
    let out = zxz(&["verify", "--qasm", qasm.to_str().unwrap(), "--unitary", u.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bench_writes_versioned_report() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let out = zxz(&[
        "bench", "--topologies", "garnet,complete:5", "--qubits", "3..4", "--seeds", "3",
        "--timeout", "120", "--out", report.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = String::from_utf8_lossy(&out.stdout);
    assert!(table.contains("garnet") && table.contains("all-to-all bound"));
    let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["report_version"], 1);
    let recs = r["records"].as_array().unwrap();
    assert_eq!(recs.len(), 4);
    for rec in recs {
        assert_eq!(rec["status"], "ok");
        if rec["topology"] == "complete-5" {
            assert!(rec["cnot_count"].as_u64() <= rec["eq6_bound"].as_u64());
        }
    }
}

#[test]
fn bench_timeout_marks_na() {
    let out = zxz(&["bench", "--topologies", "complete:8", "--qubits", "8", "--seeds", "1", "--timeout", "0"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("N/A"));
}
