use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn tdsec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tdsec"))
        .args(args)
        .env_remove("TDSEC_POVM_TOL")
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let mut full = vec!["--format", "json"];
    full.extend_from_slice(args);
    let out = tdsec(&full);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn temp_file(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("tdsec-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

fn close(a: &Value, b: f64) -> bool {
    (a.as_f64().unwrap() - b).abs() <= 1e-9
}

fn report_validator() -> jsonschema::Validator {
    let docs = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../docs");
    let read = |f: &str| -> Value { serde_json::from_str(&std::fs::read_to_string(docs.join(f)).unwrap()).unwrap() };
    jsonschema::validator_for(&read("report.schema.json")).unwrap()
}

#[test]
fn compute_d_builtins() {
    let v = json(&["compute-d", "--builtin", "locking"]);
    assert_eq!(v["command"], "compute-d");
    assert!(close(&v["result"]["d"], 0.5));
    assert!(close(&v["result"]["d_joint"], 0.5));

    let v = json(&["compute-d", "--builtin", "ideal", "--n-bits", "3"]);
    assert!(close(&v["result"]["d"], 0.0));

    // biased 1-bit key: priors ((1 + eps)/2, (1 - eps)/2) give d = eps/2
    let v = json(&["compute-d", "--builtin", "biased", "--n-bits", "1", "--eps", "0.2"]);
    assert!(close(&v["result"]["d"], 0.1));
}

#[test]
fn malformed_input_reports_location() {
    let path = temp_file("bad.json", "{\"n_bits\": 1,\n  \"dim\": }");
    let out = tdsec(&["compute-d", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 2"), "{}", stderr(&out));

    let path = temp_file(
        "schema.json",
        r#"{"n_bits":1,"dim":1,"entries":[{"key":"0","prob":"half","state":[[[1,0]]]}]}"#,
    );
    let out = tdsec(&["compute-d", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("entries[0].prob"), "{}", stderr(&out));
}

#[test]
fn exported_ensemble_reads_back() {
    let out = tdsec(&["export", "--builtin", "random", "--n-bits", "2", "--dim", "3", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0));
    let path = temp_file("random.json", &String::from_utf8(out.stdout).unwrap());
    let from_file = json(&["compute-d", "--input", path.to_str().unwrap()]);
    let builtin = json(&["compute-d", "--builtin", "random", "--n-bits", "2", "--dim", "3", "--seed", "7"]);
    assert_eq!(from_file["result"]["d"], builtin["result"]["d"]);
}

#[test]
fn locking_attacks() {
    let v = json(&["attack", "--builtin", "locking"]);
    assert!(close(&v["result"]["result"]["success_prob"], 0.5));

    let v = json(&["attack", "--builtin", "locking", "--target", "kpa", "--known", "0", "--values", "1", "--positions", "1"]);
    assert!(close(&v["result"]["result"]["success_prob"], 1.0));
    assert!(close(&v["result"]["kpa"]["average_success"], 1.0));
    assert_eq!(v["result"]["kpa"]["cases"].as_array().unwrap().len(), 2);

    let v = json(&["attack", "--builtin", "locking", "--target", "subset", "--positions", "1", "--method", "helstrom"]);
    assert!(close(&v["result"]["result"]["success_prob"], 0.5 + 2f64.sqrt() / 4.0));
}

#[test]
fn povm_out_is_written() {
    let dir = std::env::temp_dir().join(format!("tdsec-cli-povm-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("povm.json");
    let out = tdsec(&["attack", "--builtin", "locking", "--method", "pgm", "--povm-out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let povm: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(povm["dim"], 4);
    assert_eq!(povm["elements"].as_array().unwrap().len(), 4);
}

#[test]
fn inconsistent_attack_flags_are_rejected() {
    for args in [
        &["attack", "--builtin", "locking", "--target", "kpa", "--known", "0", "--positions", "1"][..],
        &["attack", "--builtin", "locking", "--target", "kpa", "--known", "0", "--values", "1", "--positions", "0"],
        &["attack", "--builtin", "locking", "--target", "subset"],
        &["attack", "--builtin", "locking", "--target", "subset", "--positions", "5"],
        &["attack", "--builtin", "locking", "--method", "helstrom"],
        &["compute-d", "--builtin", "locking", "--dim", "3"],
    ] {
        let out = tdsec(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(stderr(&out).starts_with("error:"), "{args:?}: {}", stderr(&out));
    }
}

#[test]
fn bounds_values() {
    let v = json(&["bounds", "--eps", "4.76837158203125e-7", "--uses", "2"]);
    let budget = &v["result"]["failure_budget"];
    assert_eq!(budget["uses"], 2);
    assert!(budget["total_failure"].as_f64().unwrap() < 0.1);

    let v = json(&["bounds", "--eps", "0.001", "--n-bits", "4000", "--entropy-n", "100"]);
    let rows = v["result"]["bounds"].as_array().unwrap();
    let seq = rows.iter().find(|r| r["name"] == "sequence guessing probability").unwrap();
    assert!(close(&seq["value"], 2f64.powi(-4000) + 3.0 * 0.001f64.cbrt()));
    let ent = rows.iter().find(|r| r["name"] == "key entropy lower bound").unwrap();
    assert!(close(&ent["value"], 100.0 - 0.001 * (100.0 + 1000f64.log2())));

    // entropy bound needs eps <= 1/2: reported as rejected, not an error
    let v = json(&["bounds", "--eps", "0.9", "--entropy-n", "10"]);
    assert_eq!(v["result"]["rejected"].as_array().unwrap().len(), 1);

    assert_eq!(tdsec(&["bounds", "--eps", "1.5"]).status.code(), Some(2));
    assert_eq!(tdsec(&["bounds", "--eps", "-0.1"]).status.code(), Some(2));
}

#[test]
fn reproduce_rows() {
    let v = json(&["reproduce"]);
    let rows = v["result"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0]["value"].as_f64().unwrap(), 2f64.powi(-7));
    assert!((rows[1]["value"].as_f64().unwrap() - 3e-3).abs() < 1e-12);
    assert!((rows[2]["log2_value"].as_f64().unwrap() + 8.739).abs() < 1e-3);
}

#[test]
fn counterexamples() {
    let v = json(&["counterexample", "locking"]);
    assert!(close(&v["result"]["d"], 0.5));
    assert!(close(&v["result"]["whole_key_success"], 0.5));
    assert!(close(&v["result"]["kpa_success"], 1.0));

    let v = json(&["counterexample", "biased", "--eps", "0.01", "--n-bits", "10"]);
    let r = &v["result"];
    assert!(r["v_halved"].as_f64().unwrap() * 2.0 - r["v_unhalved"].as_f64().unwrap() < 1e-12);
    assert!(r["map_success"].as_f64().unwrap() > r["blind_success"].as_f64().unwrap());
}

#[test]
fn compare_rows_hold_for_locking() {
    let v = json(&["compare", "--builtin", "locking"]);
    let rows = v["result"].as_array().unwrap();
    assert!(rows.iter().all(|r| r["holds"] != false), "{rows:?}");
}

#[test]
fn settings_are_validated() {
    let out = tdsec(&["--set", "solver.speed=3", "compute-d", "--builtin", "locking"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("solver.speed"));
    assert_eq!(tdsec(&["--set", "solver.tol", "compute-d", "--builtin", "locking"]).status.code(), Some(2));
    assert_eq!(tdsec(&["--set", "solver.tol=0", "compute-d", "--builtin", "locking"]).status.code(), Some(2));
}

#[test]
fn starved_solver_exits_three() {
    let out = tdsec(&["--format", "json", "--set", "solver.max_iter=1", "attack", "--builtin", "random", "--n-bits", "3", "--dim", "4"]);
    assert_eq!(out.status.code(), Some(3));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["converged"], false);
    assert!(stderr(&out).contains("warning"));
}

#[test]
fn tolerance_from_environment() {
    let run = |tol: &str| {
        Command::new(env!("CARGO_BIN_EXE_tdsec"))
            .args(["attack", "--builtin", "locking"])
            .env("TDSEC_POVM_TOL", tol)
            .output()
            .unwrap()
    };
    assert_eq!(run("1e-10").status.code(), Some(0));
    assert_eq!(run("-1").status.code(), Some(2));
    assert_eq!(run("abc").status.code(), Some(2));
}

#[test]
fn json_output_is_deterministic() {
    let args = ["--format", "json", "--seed", "3", "compare", "--builtin", "random", "--n-bits", "2", "--dim", "3"];
    let a = tdsec(&args);
    let b = tdsec(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn csv_has_header() {
    let out = tdsec(&["--format", "csv", "compute-d", "--builtin", "locking"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("field,value"));
    assert!(lines.any(|l| l == "d,0.5"));

    let out = tdsec(&["--format", "csv", "compare", "--builtin", "ideal"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().next().unwrap().contains(','));
}

#[test]
fn json_reports_match_schema() {
    let validator = report_validator();
    let commands: &[&[&str]] = &[
        &["compute-d", "--builtin", "locking"],
        &["compute-d", "--builtin", "random", "--n-bits", "2", "--dim", "3"],
        &["attack", "--builtin", "locking"],
        &["attack", "--builtin", "locking", "--target", "kpa", "--known", "0", "--values", "1", "--positions", "1"],
        &["attack", "--builtin", "locking", "--target", "subset", "--positions", "0", "--method", "per-bit"],
        &["compare", "--builtin", "random", "--n-bits", "2", "--dim", "2"],
        &["bounds", "--eps", "0.9", "--entropy-n", "10"],
        &["bounds", "--eps", "1e-6", "--uses", "3", "--entropy-n", "10"],
        &["reproduce"],
        &["counterexample", "locking"],
        &["counterexample", "biased"],
    ];
    for args in commands {
        let v = json(args);
        let errors: Vec<String> = validator.iter_errors(&v).map(|e| format!("{} at {}", e, e.instance_path())).collect();
        assert!(errors.is_empty(), "{args:?}: {errors:?}");
    }
}

#[test]
fn export_matches_ensemble_schema() {
    let docs = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../docs");
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(docs.join("ensemble.schema.json")).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let out = tdsec(&["export", "--builtin", "locking"]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(validator.is_valid(&v));
}
