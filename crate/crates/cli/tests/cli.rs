use std::path::PathBuf;
use std::process::{Command, Output};

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
        .display()
        .to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nlfisher"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn records(out: &Output) -> Vec<serde_json::Value> {
    serde_json::from_slice(&out.stdout).expect("json report")
}

#[test]
fn constants_reports_one_over_pi() {
    let out = run(&["constants", "--d", "1", "--s", "0.5"]);
    assert_eq!(out.status.code(), Some(0));
    let r = records(&out);
    assert_eq!(r.len(), 1);
    let v = r[0]["value"].as_f64().unwrap();
    assert!((v - std::f64::consts::FRAC_1_PI).abs() < 1e-12);
    assert_eq!(r[0]["pass"], true);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for path in [&a, &b] {
        let out = run(&[
            "markov-verify",
            "--seed",
            "42",
            "--trials",
            "200",
            "--output",
            path.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let c = run(&["frac-limit", "--density", &data("cauchy.json"), "--format", "csv"]);
    let d = run(&["frac-limit", "--density", &data("cauchy.json"), "--format", "csv"]);
    assert_eq!(c.status.code(), Some(0));
    assert_eq!(c.stdout, d.stdout);
}

#[test]
fn worker_count_does_not_change_output() {
    let args = ["frac-scaling", "--density", &data("cauchy.json"), "--s-grid", "0.3,0.9"];
    let one = Command::new(env!("CARGO_BIN_EXE_nlfisher"))
        .args(args)
        .env("NLFISHER_WORKERS", "1")
        .output()
        .unwrap();
    let four = Command::new(env!("CARGO_BIN_EXE_nlfisher"))
        .args(args)
        .env("NLFISHER_WORKERS", "4")
        .output()
        .unwrap();
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, four.stdout);
    let bad = Command::new(env!("CARGO_BIN_EXE_nlfisher"))
        .args(args)
        .env("NLFISHER_WORKERS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn failing_tolerance_gives_exit_one() {
    let ok = run(&["dissipation", "--seed", "3", "--trials", "10"]);
    assert_eq!(ok.status.code(), Some(0));
    let strict = run(&["dissipation", "--seed", "3", "--trials", "10", "--tolerance", "1e-30"]);
    assert_eq!(strict.status.code(), Some(1));
    let r = records(&strict);
    assert_eq!(r[0]["pass"], false);
    assert!(String::from_utf8_lossy(&strict.stderr).contains("FAIL markov.dissipation"));

    let strict = run(&["constants", "--d", "2", "--s", "0.5", "--tolerance", "1e-30"]);
    assert_eq!(strict.status.code(), Some(1));
}

#[test]
fn configuration_errors_give_exit_two() {
    assert_eq!(run(&["constants", "--d", "3", "--s", "0.5"]).status.code(), Some(2));
    assert_eq!(run(&["constants", "--d", "1", "--s", "1.5"]).status.code(), Some(2));
    assert_eq!(run(&["frac-limit", "--density", "/nonexistent.json"]).status.code(), Some(2));
    assert_eq!(run(&["markov-verify"]).status.code(), Some(2));
    assert_eq!(run(&["constants", "--d", "1", "--s", "0.5", "--rel-tol", "-1"]).status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"command": "constants", "unknown": true}"#).unwrap();
    assert_eq!(run(&["run", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
    std::fs::write(&bad, r#"{"family": "cauchy", "d": 1, "params": {"gamma": -1}}"#).unwrap();
    assert_eq!(run(&["frac-limit", "--density", bad.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn divergent_density_fails_the_sweep() {
    let out = run(&["frac-limit", "--density", &data("gaussian.json")]);
    assert_eq!(out.status.code(), Some(1));
    let r = records(&out);
    assert_eq!(r[0]["check"], "fractional.limit_hypotheses");
}

#[test]
fn run_config_matches_flags() {
    let via_config = run(&["run", "--config", &data("configs/markov.json")]);
    let via_flags = run(&["markov-verify", "--chains", &data("chains.json"), "--seed", "42", "--trials", "1000"]);
    assert_eq!(via_config.status.code(), Some(0));
    assert_eq!(via_config.stdout, via_flags.stdout);
    assert_eq!(run(&["run", "--config", &data("configs/gamma.json")]).status.code(), Some(0));
}

#[test]
fn csv_sweep_has_documented_columns() {
    let out = run(&["run", "--config", &data("configs/frac_limit.json")]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "s,i_s,quad_err,i_classical,deviation,converged");
    assert_eq!(lines.count(), 6);
}

#[test]
fn timing_is_opt_in() {
    let plain = records(&run(&["constants", "--d", "1", "--s", "0.5"]));
    assert!(plain[0].get("wall_time_s").is_none());
    let timed = records(&run(&["constants", "--d", "1", "--s", "0.5", "--timing"]));
    assert!(timed[0]["wall_time_s"].as_f64().unwrap() >= 0.0);
}
