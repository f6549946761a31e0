use std::process::{Command, Output};

use bannai_ito::racah::RacahTable;
use bannai_ito::scalars::parse_real;
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bi-racah"))
        .args(args)
        .env_remove("BI_RACAH_PRECISION")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("valid json")
}

#[test]
fn even_table_starts_at_rho1() {
    let out = run(&[
        "--format", "json", "bi", "--family", "even", "--params", "1,1,1", "--N", "2", "--table",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    assert_eq!(doc["grid"][0], "1/1");
    assert_eq!(doc["weights"][0], "1/1");
    assert_eq!(doc["grid"].as_array().unwrap().len(), 3);
}

#[test]
fn odd_family_verifies_exactly() {
    let out = run(&[
        "--format", "json", "bi", "--family", "odd", "--params", "1,1,1", "--N", "1", "--verify",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    assert_eq!(doc["passed"], true);
    for check in doc["checks"].as_array().unwrap() {
        assert_eq!(check["residual"], "0/1", "{check}");
    }
}

#[test]
fn parity_mismatch_is_a_usage_error() {
    let out = run(&["bi", "--family", "even", "--params", "1,1,1", "--N", "3", "--verify"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("parity"));
}

#[test]
fn eval_is_exact() {
    let out = run(&[
        "--format", "csv", "bi", "--family", "even", "--params", "1,1,1", "--N", "2", "--eval", "0,5/7",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).lines().nth(1).unwrap().starts_with("0,5/7,1/1,"));
    let out = run(&[
        "bi", "--family", "even", "--params", "1,1,1", "--N", "2", "--eval", "2,x",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn racah_against_oracle() {
    let out = run(&[
        "--format",
        "json",
        "racah",
        "--mu",
        "0.5,0.5,0.5",
        "--N",
        "1",
        "--oracle",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    let deviation = parse_real(doc["oracle"]["deviation"].as_str().unwrap(), 64).unwrap();
    assert!(deviation < 1e-10);
    let table: RacahTable = serde_json::from_value(doc["table"].clone()).unwrap();
    assert_eq!(table.degree, 1);
    assert_eq!(serde_json::to_value(&table).unwrap(), doc["table"]);
}

#[test]
fn degenerate_racah_table() {
    let out = run(&["racah", "--mu", "0,0,0", "--N", "2"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        stdout(&out)
            .lines()
            .filter(|l| l.trim_start().starts_with(['-', '3']))
            .count(),
        3
    );
}

#[test]
fn racah_csv_has_labels() {
    let out = run(&["--format", "csv", "racah", "--mu", "0.5,0.5,0.5", "--N", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "q12\\q23,-3/2,5/2");
    assert!(rows[1].starts_with("-3/2,"));
    assert!(rows[2].starts_with("5/2,"));
    assert_eq!(rows.len(), 3);
}

#[test]
fn precision_floor_from_flag_and_env() {
    assert_eq!(
        run(&["--precision", "20", "racah", "--mu", "0,0,0", "--N", "1"])
            .status
            .code(),
        Some(2)
    );
    let out = Command::new(env!("CARGO_BIN_EXE_bi-racah"))
        .args(["racah", "--mu", "0,0,0", "--N", "1"])
        .env("BI_RACAH_PRECISION", "25")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = Command::new(env!("CARGO_BIN_EXE_bi-racah"))
        .args(["racah", "--mu", "0,0,0", "--N", "1"])
        .env("BI_RACAH_PRECISION", "35")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn bad_usage_exits_two() {
    assert_eq!(run(&["racah", "--mu", "0,0", "--N", "1"]).status.code(), Some(2));
    assert_eq!(run(&["racah", "--mu", "0,0,-1", "--N", "1"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        run(&["--tolerance", "1e-60", "racah", "--mu", "0,0,0", "--N", "1"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn verify_all_default_grid_passes() {
    let out = run(&["--format", "json", "verify-all"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = json(&out);
    assert_eq!(doc["passed"], true);
    assert_eq!(doc["config"]["Nmax"], 6);
    let names: Vec<&str> = doc["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    for expected in [
        "bi-algebra",
        "aw-relations",
        "casimir-value",
        "k2-spectrum",
        "orthogonality",
        "unitarity",
        "cg-spectrum",
        "leonard-triple",
        "twisted-coproduct",
        "oracle-racah",
    ] {
        assert!(names.contains(&expected), "missing {expected}");
    }
}

#[test]
fn injected_fault_is_named() {
    let out = run(&["verify-all", "--Nmax", "2", "--oracle-Nmax", "1", "--inject-fault"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bi-algebra"), "{err}");
    assert!(stdout(&out).contains("FAIL bi-algebra"));
}

#[test]
fn degenerate_grid_passes() {
    let out = run(&["verify-all", "--grid", "mu=0"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn output_is_deterministic() {
    let args = [
        "--format",
        "json",
        "--seed",
        "7",
        "verify-all",
        "--grid",
        "mu=0,1/2",
        "--Nmax",
        "3",
        "--oracle-Nmax",
        "2",
    ];
    assert_eq!(run(&args).stdout, run(&args).stdout);
}
