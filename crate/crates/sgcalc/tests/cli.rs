//! End-to-end tests for the batch front-end: exit-code contract, report and
//! CSV artifacts, determinism, and the verb coverage table.

use std::collections::{HashMap, HashSet};
use std::path::Path;
use std::process::{Command, Output};

use sgcalc::cli::{OP_COVERAGE, VERBS};

const LAMBDA_11: &str = r#"{
  "symbol": {
    "dim": 1,
    "order": [1, 1],
    "ast": { "kind": "Mul", "lhs": { "kind": "JapX" }, "rhs": { "kind": "JapXi" } }
  }
}"#;

fn sgcalc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sgcalc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_input(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn coverage_table_maps_every_op_to_exactly_one_verb() {
    let mut seen = HashMap::new();
    for (op, verb) in OP_COVERAGE {
        assert!(
            VERBS.contains(&verb),
            "op {op} routed to unknown verb {verb}"
        );
        assert!(
            seen.insert(op, verb).is_none(),
            "op {op} appears more than once"
        );
    }
    let used: HashSet<&str> = OP_COVERAGE.iter().map(|(_, v)| *v).collect();
    for verb in VERBS {
        assert!(used.contains(verb), "verb {verb} owns no operation");
    }
    assert_eq!(
        VERBS.len(),
        VERBS.iter().collect::<HashSet<_>>().len(),
        "duplicate verb"
    );
}

#[test]
fn check_symbol_passes_and_writes_report_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_input(dir.path(), "sym.json", LAMBDA_11);
    let out = dir.path().join("report.json");
    let res = sgcalc(&["check-symbol", &input, "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["verb"], "check-symbol");
    assert_eq!(report["pass"], true);
    let csv = std::fs::read_to_string(out.with_extension("csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("alpha,beta,base,worst,growth,pass"));
    assert!(lines.next().is_some(), "csv has data rows");
}

#[test]
fn unknown_verb_rejected_before_io() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_input(dir.path(), "sym.json", LAMBDA_11);
    let out = dir.path().join("report.json");
    let res = sgcalc(&["frobnicate", &input, "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("unknown verb"), "stderr: {err}");
    assert!(err.contains("check-symbol"), "stderr lists the vocabulary");
    assert!(!out.exists(), "no report on a rejected command");
}

#[test]
fn schema_violation_exits_2_with_line_anchor() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_input(
        dir.path(),
        "bad.json",
        "{\n  \"symbol\": { \"dim\": 1, \"order\": { \"m_e\": 1 } }\n}\n",
    );
    let res = sgcalc(&["check-symbol", &input]);
    assert_eq!(res.status.code(), Some(2));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(
        err.contains("bad.json:2:"),
        "message anchors the offending line: {err}"
    );
}

#[test]
fn missing_input_exits_2() {
    let res = sgcalc(&["check-symbol", "/nonexistent/input.json"]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn contract_failure_exits_1_but_still_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    // 3 + gaussian has limit 3, so expecting 7 is a contract failure, not an
    // input error
    let input = write_input(
        dir.path(),
        "rad.json",
        r#"{
          "e": {
            "dim": 1,
            "order": [0, 0],
            "ast": {
              "kind": "Add",
              "lhs": { "kind": "Const", "re": 3.0, "im": 0.0 },
              "rhs": {
                "kind": "Exp",
                "arg": {
                  "kind": "Mul",
                  "lhs": { "kind": "Const", "re": -1.0, "im": 0.0 },
                  "rhs": {
                    "kind": "Add",
                    "lhs": { "kind": "IntPow", "base": { "kind": "AbsX" }, "exp": 2 },
                    "rhs": { "kind": "IntPow", "base": { "kind": "AbsXi" }, "exp": 2 }
                  }
                }
              }
            }
          },
          "expected_c": [7.0, 0.0]
        }"#,
    );
    let out = dir.path().join("report.json");
    let res = sgcalc(&["radial-split", &input, "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["pass"], false);
}

#[test]
fn fourier_probe_fails_order_preservation() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_input(
        dir.path(),
        "probe.json",
        r#"{ "operator": { "kind": "fourier" } }"#,
    );
    let out = dir.path().join("probe_report.json");
    let res = sgcalc(&["opi-probe", &input, "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1), "{}", String::from_utf8_lossy(&res.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["details"]["preserves"], false);
    // every probe that fails its own order is caught at the swapped order
    let entries = report["details"]["entries"].as_array().unwrap();
    assert!(entries
        .iter()
        .filter(|e| e["pass"] == false)
        .all(|e| e["pass_swapped"] == true));
    let csv = std::fs::read_to_string(out.with_extension("csv")).unwrap();
    assert_eq!(
        csv.lines().next(),
        Some("m_e,m_psi,pass,pass_swapped,growth,growth_swapped")
    );
}

#[test]
fn identical_inputs_produce_byte_identical_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_input(dir.path(), "sym.json", LAMBDA_11);
    let out_a = dir.path().join("a.json");
    let out_b = dir.path().join("b.json");
    for out in [&out_a, &out_b] {
        let res = sgcalc(&["check-symbol", &input, "--out", out.to_str().unwrap()]);
        assert_eq!(res.status.code(), Some(0));
    }
    assert_eq!(
        std::fs::read(&out_a).unwrap(),
        std::fs::read(&out_b).unwrap(),
        "reports differ between runs"
    );
    assert_eq!(
        std::fs::read(out_a.with_extension("csv")).unwrap(),
        std::fs::read(out_b.with_extension("csv")).unwrap(),
        "csv tables differ between runs"
    );
}

#[test]
fn json_flag_prints_machine_report_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_input(dir.path(), "sym.json", LAMBDA_11);
    let out = dir.path().join("report.json");
    let res = sgcalc(&["check-symbol", &input, "--out", out.to_str().unwrap(), "--json"]);
    assert_eq!(res.status.code(), Some(0));
    let line = String::from_utf8(res.stdout).unwrap();
    let report: serde_json::Value = serde_json::from_str(line.trim()).unwrap();
    assert_eq!(report["verb"], "check-symbol");
    assert_eq!(report["pass"], true);
}

#[test]
fn grid_and_tol_overrides_are_honored() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_input(
        dir.path(),
        "rec.json",
        r#"{
          "symbol": {
            "dim": 1,
            "order": [1, 0],
            "ast": { "kind": "JapX" }
          },
          "samples": [ { "x": [1.0], "xi": [2.0] }, { "x": [-3.0], "xi": [0.5] } ]
        }"#,
    );
    let out = dir.path().join("report.json");
    let res = sgcalc(&[
        "recover",
        &input,
        "--grid",
        "128",
        "--box",
        "16",
        "--tol",
        "1e-10",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["details"]["tol"], 1e-10);
}

#[test]
fn thread_cap_does_not_change_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_input(dir.path(), "sym.json", LAMBDA_11);
    let out_a = dir.path().join("a.json");
    let out_b = dir.path().join("b.json");
    let res = sgcalc(&["check-symbol", &input, "--out", out_a.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0));
    let res = Command::new(env!("CARGO_BIN_EXE_sgcalc"))
        .args(["check-symbol", &input, "--out", out_b.to_str().unwrap()])
        .env("SGCALC_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(0));
    assert_eq!(
        std::fs::read(&out_a).unwrap(),
        std::fs::read(&out_b).unwrap()
    );
}
