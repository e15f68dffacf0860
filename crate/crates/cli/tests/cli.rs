use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mfree"))
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn golden(name: &str) -> String {
    std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)).unwrap()
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_str(&stdout(out)).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn one_qubit_worked_case() {
    let out = run(&[
        "mitigate",
        "--counts",
        p(&data("counts_1q.json")),
        "--cal",
        p(&data("cal_1q.json")),
        "--overhead",
        "--expval",
        "Z",
    ]);
    let text = stdout(&out);
    assert_eq!(text, golden("mitigate_1q.json"));
    let v: Value = serde_json::from_str(&text).unwrap();
    let q = &v["quasi_probabilities"];
    assert!((q["0"].as_f64().unwrap() - 6.0 / 7.0).abs() < 1e-12);
    assert!((q["1"].as_f64().unwrap() - 1.0 / 7.0).abs() < 1e-12);
    assert!((v["expval"]["value"].as_f64().unwrap() - 5.0 / 7.0).abs() < 1e-12);
    let m = v["overhead"]["overhead"].as_f64().unwrap();
    assert!((m - 121.0 / 49.0).abs() < 1e-12);
    let sigma = v["overhead"]["sigma_bound"].as_f64().unwrap();
    assert!((sigma - (m / 10.0).sqrt()).abs() < 1e-15);
    assert_eq!(v["report"]["method"], "direct");
}

#[test]
fn identity_calibration_unit_expval() {
    let out = run(&[
        "mitigate",
        "--counts",
        p(&data("counts_3q.json")),
        "--cal",
        p(&data("identity_3q.json")),
        "--expval",
        "III",
        "--project",
    ]);
    let text = stdout(&out);
    assert_eq!(text, golden("mitigate_identity_3q.json"));
    let v: Value = serde_json::from_str(&text).unwrap();
    assert!((v["expval"]["value"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn distance_zero_returns_normalized_counts() {
    for method in ["direct", "iterative"] {
        let v = json(&run(&[
            "mitigate",
            "--counts",
            p(&data("counts_3q.json")),
            "--cal",
            p(&data("cal_3q.json")),
            "--distance",
            "0",
            "--method",
            method,
        ]));
        let q = v["quasi_probabilities"].as_object().unwrap();
        let expected = [("000", 412), ("011", 37), ("101", 55), ("110", 21), ("111", 475)];
        assert_eq!(q.len(), expected.len());
        for (k, c) in expected {
            assert_eq!(q[k].as_f64().unwrap(), c as f64 / 1000.0, "{method} {k}");
        }
    }
    let text = stdout(&run(&[
        "mitigate",
        "--counts",
        p(&data("counts_1q.json")),
        "--cal",
        p(&data("cal_1q.json")),
        "--distance",
        "0",
    ]));
    assert_eq!(text, golden("mitigate_1q_d0.json"));
}

#[test]
fn exit_codes() {
    let bad_cal = run(&["mitigate", "--counts", p(&data("counts_1q.json")), "--cal", p(&data("bad_cal.json"))]);
    assert_eq!(bad_cal.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad_cal.stderr).contains("validation"));

    let width = run(&["mitigate", "--counts", p(&data("counts_3q.json")), "--cal", p(&data("cal_1q.json"))]);
    assert_eq!(width.status.code(), Some(2));

    let bad_op = run(&[
        "mitigate",
        "--counts",
        p(&data("counts_1q.json")),
        "--cal",
        p(&data("cal_1q.json")),
        "--expval",
        "X",
    ]);
    assert_eq!(bad_op.status.code(), Some(2));

    let stuck = run(&[
        "mitigate",
        "--counts",
        p(&data("counts_3q.json")),
        "--cal",
        p(&data("cal_3q.json")),
        "--method",
        "iterative",
        "--max-iter",
        "1",
        "--tol",
        "1e-15",
    ]);
    assert_eq!(stuck.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&stuck.stderr).contains("did not converge"));

    let missing = run(&["mitigate", "--counts", "/nonexistent/counts.json", "--cal", p(&data("cal_1q.json"))]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn memory_report() {
    let text = stdout(&run(&["memory", "--qubits", "42", "--distance", "3", "--json"]));
    assert_eq!(text, golden("memory_42_3.json"));
    let v: Value = serde_json::from_str(&text).unwrap();
    let pib = 2f64.powi(50);
    let total = v["total_bytes"].as_f64().unwrap() / pib;
    let values = v["value_bytes"].as_f64().unwrap() / pib;
    assert!((total - 580.5).abs() < 0.05, "{total}");
    assert!((values - 193.5).abs() < 0.05, "{values}");

    let human = stdout(&run(&["memory", "--qubits", "42", "--distance", "3"]));
    assert!(human.contains("580.5 PiB"));
    assert!(human.contains("193.5 PiB"));

    let tiny = json(&run(&["memory", "--qubits", "1", "--distance", "0", "--json"]));
    assert_eq!(tiny["total_bytes"], 48);
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        let status = bin()
            .args(["simulate", "--qubits", "2", "--ghz", "--cal", p(&data("identity_2q.json"))])
            .args(["--shots", "100", "--seed", "7", "--out", p(out)])
            .status()
            .unwrap();
        assert!(status.success());
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    assert_eq!(text, golden("simulate_ghz_2q.json"));
    let v: Value = serde_json::from_str(&text).unwrap();
    let keys: Vec<&String> = v["counts"].as_object().unwrap().keys().collect();
    assert_eq!(keys, ["00", "11"]);
    assert_eq!(v["shots"], 100);
}

#[test]
fn thread_count_does_not_change_output() {
    let cal = data("cal_3q.json");
    let args = [
        "simulate",
        "--qubits",
        "3",
        "--ghz",
        "--gate-noise",
        "0.1",
        "--cal",
        p(&cal),
        "--shots",
        "200000",
        "--seed",
        "3",
    ];
    let one = bin().env("MFREE_THREADS", "1").args(args).output().unwrap();
    let four = bin().env("MFREE_THREADS", "4").args(args).output().unwrap();
    assert_eq!(stdout(&one), stdout(&four));
}

#[test]
fn simulate_then_mitigate_improves_parity() {
    let dir = tempfile::tempdir().unwrap();
    let cal = dir.path().join("cal.json");
    let counts = dir.path().join("counts.json");
    let mitigated = dir.path().join("mitigated.json");
    stdout(&run(&[
        "synth-cal",
        "--qubits",
        "10",
        "--min-error",
        "0.01",
        "--max-error",
        "0.02",
        "--seed",
        "11",
        "--out",
        p(&cal),
    ]));
    stdout(&run(&[
        "simulate",
        "--qubits",
        "10",
        "--ghz",
        "--cal",
        p(&cal),
        "--shots",
        "8192",
        "--seed",
        "5",
        "--out",
        p(&counts),
    ]));
    let parity = "ZZZZZZZZZZ";
    let raw = json(&run(&["mitigate", "--counts", p(&counts), "--cal", p(&cal), "--distance", "0", "--expval", parity]));
    let args = ["mitigate", "--counts", p(&counts), "--cal", p(&cal), "--expval", parity, "--out", p(&mitigated)];
    stdout(&run(&args));
    let first = std::fs::read_to_string(&mitigated).unwrap();
    stdout(&run(&args));
    assert_eq!(first, std::fs::read_to_string(&mitigated).unwrap());

    let fixed: Value = serde_json::from_str(&first).unwrap();
    let raw_value = raw["expval"]["value"].as_f64().unwrap();
    let fixed_value = fixed["expval"]["value"].as_f64().unwrap();
    assert!(fixed_value > raw_value, "{fixed_value} <= {raw_value}");
    assert!((fixed_value - 1.0).abs() < 0.05, "{fixed_value}");
}
