use std::path::Path;
use std::process::{Command, Output};

fn apc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_apc"))
        .args(args)
        .env_remove("APC_THREADS")
        .output()
        .expect("binary runs")
}

fn apc_threads(args: &[&str], threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_apc"))
        .args(args)
        .env("APC_THREADS", threads)
        .output()
        .expect("binary runs")
}

#[test]
fn solve_equal_case_table_and_report() {
    let out = apc(&["solve", "--lambda", "1", "--beta", "1", "--alpha", "0.5", "--grid", "101"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let table = String::from_utf8(out.stdout).unwrap();
    assert!(!table.contains('\r'));
    let mut rdr = csv::Reader::from_reader(table.as_bytes());
    let headers = rdr.headers().unwrap().clone();
    assert_eq!(&headers[0], "r");
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 101);
    let mid = &rows[50];
    let r: f64 = mid[0].parse().unwrap();
    let f1: f64 = mid[1].parse().unwrap();
    let f2: f64 = mid[2].parse().unwrap();
    assert_eq!(r, 0.5);
    assert!((f1 - 4.0 / 27.0).abs() < 1e-12);
    assert!((f2 - f1).abs() < 1e-12);

    let report: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(report["solution"]["k0"].as_f64(), Some(1.0));
    assert_eq!(report["solution"]["method"], "ClosedFormEqual");
}

#[test]
fn solve_json_document_contains_table() {
    let out = apc(&[
        "solve", "--lambda", "1.2", "--beta", "1", "--alpha", "0.3", "--epsilon", "1e-3", "--method", "converge",
        "--grid", "33", "--format", "json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["table"].as_array().unwrap().len(), 33);
    let k0 = doc["solution"]["k0"].as_f64().unwrap();
    assert!((k0 - 1.000_138_865_923_955).abs() < 1e-12);
    assert_eq!(doc["diagnostics"]["converged"], true);
}

#[test]
fn relabels_when_beta_exceeds_lambda() {
    let out = apc(&["solve", "--lambda", "1", "--beta", "1.25", "--alpha", "0.3", "--epsilon", "1e-3", "--format", "json", "--grid", "8"]);
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["params"]["swapped"], true);
    assert_eq!(doc["params"]["lambda"].as_f64(), Some(1.0));
    assert_eq!(doc["params"]["beta"].as_f64(), Some(0.8));
}

#[test]
fn invalid_parameters_exit_2() {
    for args in [
        vec!["solve", "--lambda", "1", "--beta", "1", "--alpha", "1.5"],
        vec!["solve", "--lambda", "-1", "--beta", "1", "--alpha", "0.5"],
        vec!["solve", "--lambda", "1.2", "--beta", "1", "--alpha", "0.3", "--epsilon", "0.5"],
        vec!["solve", "--lambda", "1.2", "--beta", "1", "--alpha", "0.3", "--method", "equal"],
        vec!["sweep", "--lambda", "1", "--beta", "1", "--alpha", "0.5", "--sweep", "gamma:0:1:3"],
        vec!["bogus"],
    ] {
        let out = apc(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn verify_passes_in_the_equal_case() {
    let out = apc(&["verify", "--lambda", "1", "--beta", "1", "--alpha", "0.5"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["passed"], true);
}

#[test]
fn simulate_is_byte_identical_across_threads_and_runs() {
    let args = ["simulate", "--lambda", "1", "--beta", "1", "--alpha", "0.5", "--n", "50000", "--seed", "42"];
    let a = apc_threads(&args, "1");
    let b = apc_threads(&args, "4");
    let c = apc_threads(&args, "4");
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(b.stdout, c.stdout);
    let summary: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(summary["seed"].as_u64(), Some(42));
    assert_eq!(summary["n_draws"].as_u64(), Some(50000));
}

#[test]
fn simulate_writes_trace_and_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let summary = dir.path().join("summary.json");
    let out = apc(&[
        "simulate", "--lambda", "1.2", "--beta", "1", "--alpha", "0.3", "--n", "500", "--seed", "3",
        "--trace", trace.to_str().unwrap(), "--output", summary.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&trace).unwrap();
    assert_eq!(text.lines().count(), 501);
    let s: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&summary).unwrap()).unwrap();
    assert_eq!(s["n_draws"].as_u64(), Some(500));
}

#[test]
fn params_file_matches_flags() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("params.json");
    std::fs::write(&path, r#"{"lambda": 1.2, "beta": 1.0, "alpha": 0.3, "epsilon": 0.001}"#).unwrap();
    let from_file = apc(&["solve", "--params-file", path.to_str().unwrap(), "--format", "json", "--grid", "16"]);
    let from_flags = apc(&["solve", "--lambda", "1.2", "--beta", "1", "--alpha", "0.3", "--epsilon", "1e-3", "--format", "json", "--grid", "16"]);
    assert_eq!(from_file.status.code(), Some(0), "{}", String::from_utf8_lossy(&from_file.stderr));
    assert_eq!(from_file.stdout, from_flags.stdout);
}

#[test]
fn missing_params_file_exits_2() {
    let out = apc(&["solve", "--params-file", "/nonexistent/params.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_csv_has_one_row_per_point() {
    let out = apc(&[
        "sweep", "--lambda", "1.2", "--beta", "1", "--alpha", "0.3", "--epsilon", "1e-3",
        "--sweep", "lambda:1.1:1.5:5", "--n", "2000",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let mut rdr = csv::Reader::from_reader(&out.stdout[..]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().all(|r| r.iter().next_back() == Some("ok")));
}

#[test]
fn examples_directory_exists() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples");
    for name in ["solve_equal", "general_iteration", "payoff", "verify_oracle", "simulate", "sweep"] {
        assert!(dir.join(format!("{name}.rs")).is_file(), "{name}");
    }
}
