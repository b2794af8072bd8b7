use std::process::{Command, Output};

use lambdagen::term::Term;
use lambdagen::types::infer_type;

fn lambdagen(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lambdagen"))
        .args(args)
        .output()
        .expect("run lambdagen")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn count_closed_typable() {
    let o = lambdagen(&["count", "--class", "closed-typable", "--size", "10"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "508\n");
}

#[test]
fn tune_reports_calibrated_parameter() {
    let o = lambdagen(&["tune", "--class", "plain", "--target-size", "120"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).lines().any(|l| l.starts_with("x=0.29558095907")));
}

#[test]
fn sample_json_round_trips() {
    let args = [
        "sample", "--class", "typed", "--min", "5", "--max", "5", "--seed", "42", "--json",
    ];
    let o = lambdagen(&args);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    let term: Term = v["term"].as_str().unwrap().parse().unwrap();
    assert!(term.is_closed());
    assert_eq!(term.natural_size(), 6);
    assert_eq!(
        infer_type(&term).unwrap().to_string(),
        v["type"].as_str().unwrap()
    );
    assert_eq!(lambdagen(&args).stdout, o.stdout);
}

#[test]
fn tuned_config_drives_the_sampler() {
    let dir = std::env::temp_dir().join(format!("lambdagen-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("nf.cfg");
    let o = lambdagen(&[
        "tune",
        "--class",
        "nf",
        "--target-size",
        "40",
        "--emit",
        "config",
    ]);
    std::fs::write(&path, &o.stdout).unwrap();
    let p = path.to_str().unwrap();
    let o = lambdagen(&[
        "sample", "--class", "typed-nf", "--min", "10", "--max", "30", "--config", p,
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    // plain thresholds cannot drive the normal-form sampler
    let o = lambdagen(&["tune", "--class", "plain", "--emit", "config"]);
    std::fs::write(&path, &o.stdout).unwrap();
    let o = lambdagen(&["sample", "--class", "typed-nf", "--config", p]);
    assert_eq!(o.status.code(), Some(3));
    std::fs::write(&path, "family=nf\nboltzmann_nf_lambda=oops\n").unwrap();
    let o = lambdagen(&["sample", "--class", "typed-nf", "--config", p]);
    assert_eq!(o.status.code(), Some(4));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn exit_codes() {
    assert_eq!(lambdagen(&["frobnicate"]).status.code(), Some(3));
    let o = lambdagen(&[
        "sample",
        "--class",
        "typed",
        "--min",
        "50",
        "--max",
        "50",
        "--max-steps",
        "3",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(lambdagen(&["selftest"]).status.code(), Some(0));
}

#[test]
fn threaded_sample_reports_winner() {
    let o = lambdagen(&[
        "sample",
        "--class",
        "typed",
        "--min",
        "20",
        "--max",
        "40",
        "--threads",
        "4",
        "--json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert!(v["winner"].as_u64().unwrap() < 4);
    assert!(v["elapsed_ms"].is_number());
    assert_eq!(v["workers"], 4);
}
