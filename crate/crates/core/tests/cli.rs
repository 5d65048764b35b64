use std::path::Path;
use std::process::{Command, Output};

use pasa::io::read_vector;

fn pasa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pasa")).args(args).output().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn generated_problem_solves_with_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let prob = dir.path().join("qp.json");
    let out = dir.path().join("x.txt");
    let trace = dir.path().join("trace.csv");
    assert!(pasa(&["generate", "--kind", "qp", "--n", "12", "--m", "4", "--seed", "9", "--out", path(&prob)]).status.success());
    let o = pasa(&["solve", path(&prob), "--tau", "1e-8", "--out", path(&out), "--trace", path(&trace)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = String::from_utf8_lossy(&o.stdout);
    assert!(report.contains("converged") && report.contains("tolerance    1e-8"), "{report}");
    let x = read_vector(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(x.len(), 12);
    let trace = std::fs::read_to_string(&trace).unwrap();
    assert!(trace.starts_with("iter,phase,step,f,global_error,local_error,theta,episode,active,max_violation,step_length"));
    assert!(trace.lines().nth(1).unwrap().contains(",init,init,"));
}

#[test]
fn malformed_input_exits_with_parse_code() {
    let dir = tempfile::tempdir().unwrap();
    let prob = dir.path().join("bad.json");
    std::fs::write(&prob, r#"{"objective": {"linear": {"c": [1.0]}}}"#).unwrap();
    let o = pasa(&["solve", path(&prob)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("missing field `n`"), "{}", stderr(&o));

    std::fs::write(&prob, r#"{"n": 2, "lo": [0.0], "objective": {"linear": {"c": [1.0, 1.0]}}}"#).unwrap();
    let o = pasa(&["solve", path(&prob)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("lo"), "{}", stderr(&o));
}

#[test]
fn invalid_options_exit_with_parse_code() {
    let dir = tempfile::tempdir().unwrap();
    let prob = dir.path().join("lp.json");
    assert!(pasa(&["generate", "--kind", "lp", "--n", "4", "--m", "2", "--out", path(&prob)]).status.success());
    let o = pasa(&["solve", path(&prob), "--theta", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("theta"));
    let o = pasa(&["generate", "--n", "0", "--out", path(&prob)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn infeasible_problem_exits_with_its_own_code() {
    let dir = tempfile::tempdir().unwrap();
    let prob = dir.path().join("empty.json");
    let text = r#"{"n": 2, "m": 1, "A": {"row": [0, 0], "col": [0, 1], "val": [1.0, 1.0]}, "bl": [3.0],
        "lo": [0.0, 0.0], "hi": [1.0, 1.0], "objective": {"linear": {"c": [1.0, 1.0]}}}"#;
    std::fs::write(&prob, text).unwrap();
    let o = pasa(&["solve", path(&prob)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stdout).contains("infeasible_problem"));
}

#[test]
fn missing_file_is_a_plain_failure() {
    let o = pasa(&["solve", "/nonexistent/problem.json"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn qps_converts_and_solves() {
    let dir = tempfile::tempdir().unwrap();
    let qps = dir.path().join("tiny.qps");
    let json = dir.path().join("tiny.json");
    let out = dir.path().join("x.txt");
    // min x² + y² − 2x − 2y  s.t. x + y ≤ 1, x, y ≥ 0  →  (½, ½)
    let text = "NAME tiny\nROWS\n N obj\n L c1\nCOLUMNS\n x obj -2 c1 1\n y obj -2 c1 1\nRHS\n rhs c1 1\nQUADOBJ\n x x 2\n y y 2\nENDATA\n";
    std::fs::write(&qps, text).unwrap();
    let o = pasa(&["convert", path(&qps), path(&json)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = pasa(&["solve", path(&json), "--out", path(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let x = read_vector(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!((x[0] - 0.5).abs() < 1e-6 && (x[1] - 0.5).abs() < 1e-6, "{x:?}");

    std::fs::write(&qps, "NAME bad\nROWS\n N obj\nCOLUMNS\n MARKER 'MARKER' 'INTORG'\nENDATA\n").unwrap();
    let o = pasa(&["convert", path(&qps), path(&json)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 5"), "{}", stderr(&o));
}

#[test]
fn profile_subcommand_reproduces_suite_output() {
    let dir = tempfile::tempdir().unwrap();
    let probs = dir.path().join("problems");
    std::fs::create_dir(&probs).unwrap();
    for (kind, seed) in [("qp", "1"), ("qp", "2"), ("lp", "3")] {
        let f = probs.join(format!("{kind}{seed}.json"));
        assert!(pasa(&["generate", "--kind", kind, "--n", "6", "--m", "2", "--seed", seed, "--out", path(&f)]).status.success());
    }
    std::fs::write(probs.join("broken.json"), "{").unwrap();
    let records = dir.path().join("records.csv");
    let profile = dir.path().join("profile.csv");
    let again = dir.path().join("again.csv");
    let o = pasa(&["suite", path(&probs), "--records", path(&records), "--profile", path(&profile)]);
    // The unparsable file is recorded as a failure, which fails the suite.
    assert_eq!(o.status.code(), Some(1));
    let recs = std::fs::read_to_string(&records).unwrap();
    assert_eq!(recs.lines().count(), 1 + 2 * 4);
    assert!(recs.contains("parse_error"));
    assert!(pasa(&["profile", path(&records), "--out", path(&again)]).status.success());
    assert_eq!(std::fs::read_to_string(&profile).unwrap(), std::fs::read_to_string(&again).unwrap());
}
