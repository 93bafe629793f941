use std::path::Path;
use std::process::{Command, Output};

fn flowtrack(cwd: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flowtrack")).args(args).current_dir(cwd).output().unwrap()
}

fn ok(cwd: &Path, args: &[&str]) -> String {
    let out = flowtrack(cwd, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn workspace() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["synth", "--out", "m/b_slow.json", "--frequency", "0.25"]);
    ok(d, &["synth", "--out", "m/a_fast.json", "--frequency", "0.5"]);
    ok(d, &["synth", "--out", "m/c_static.json", "--amplitude", "0", "--duration", "2"]);
    dir
}

fn tiny_train(d: &Path) {
    ok(
        d,
        &[
            "train", "--motions", "m", "--out", "run", "--quiet", "--set", "distill.iterations=2", "--set",
            "distill.gradient_steps=30", "--set", "env.episode_len=60",
        ],
    );
}

#[test]
fn analyze_orders_by_filename_and_scores_static_clip_zero() {
    let dir = workspace();
    let d = dir.path();
    std::fs::write(d.join("m/zz_bad.json"), "{").unwrap();
    let out = flowtrack(d, &["analyze", "m"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("zz_bad.json"));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let names: Vec<&str> = report.as_array().unwrap().iter().map(|e| e["motion"].as_str().unwrap()).collect();
    assert_eq!(names, ["a_fast.json", "b_slow.json", "c_static.json"]);
    let keys: Vec<&String> = report[0]["raw"].as_object().unwrap().keys().collect();
    assert_eq!(keys.len(), 7);
    assert!(report[2]["scores"].as_array().unwrap().iter().all(|s| s.as_f64() == Some(0.0)));

    let only_bad = tempfile::tempdir().unwrap();
    std::fs::write(only_bad.path().join("x.json"), "[]").unwrap();
    assert_eq!(flowtrack(only_bad.path(), &["analyze", "."]).status.code(), Some(1));
}

#[test]
fn actuator_point_and_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let text = ok(d, &["actuator", "7520-22.5", "--v", "18.6", "--tau", "200"]);
    assert!(text.contains("clipped 55.5\n"), "{text}");
    let text = ok(d, &["actuator", "7520-22.5", "--v", "0", "--tau", "50"]);
    assert!(text.contains("friction 0\n") && text.contains("applied 50\n"), "{text}");

    let csv = ok(d, &["actuator", "4010-25", "--sweep", "--tau", "3", "--points", "400"]);
    let limits: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(limits.len(), 400);
    assert!(limits.windows(2).all(|w| w[1] <= w[0]));

    let out = flowtrack(d, &["actuator", "nope"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("7520-22.5"));
}

#[test]
fn usage_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(flowtrack(d, &["frobnicate"]).status.code(), Some(1));
    assert_eq!(flowtrack(d, &["train"]).status.code(), Some(1));
    assert_eq!(flowtrack(d, &["--help"]).status.code(), Some(0));
    assert_eq!(flowtrack(d, &["synth"]).status.code(), Some(1));
}

#[test]
fn train_eval_refine_pipeline() {
    let dir = workspace();
    let d = dir.path();
    tiny_train(d);
    let loss = std::fs::read_to_string(d.join("run/loss.csv")).unwrap();
    assert_eq!(loss.lines().next(), Some("iteration,loss"));
    assert_eq!(loss.lines().count(), 3);

    let out = ok(d, &["eval", "--motions", "m", "--policy", "run/policy.json", "--rollouts", "2", "--set", "env.episode_len=60", "--out", "e.json"]);
    assert!(out.starts_with("success_rate "));
    let e: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("e.json")).unwrap()).unwrap();
    assert_eq!(e["motions"].as_array().unwrap().len(), 3);
    for key in ["mpjpe_mm", "dvel", "dacc", "success_rate", "episodes"] {
        assert!(e["aggregate"].get(key).is_some(), "missing {key}");
    }

    ok(d, &["refine", "--motions", "m", "--policy", "run/policy.json", "--out", "ref", "--set", "es.generations=0", "--set", "es.episodes=1", "--set", "env.episode_len=30"]);
    let csv = std::fs::read_to_string(d.join("ref/reward.csv")).unwrap();
    assert_eq!(csv, "generation,best\n");
    ok(d, &["refine", "--motions", "m", "--policy", "run/policy.json", "--out", "ref2", "--set", "es.generations=3", "--set", "es.population=2", "--set", "es.episodes=1", "--set", "env.episode_len=30"]);
    let best: Vec<f64> = std::fs::read_to_string(d.join("ref2/reward.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(best.len(), 3);
    assert!(best.windows(2).all(|w| w[1] >= w[0]));
    ok(d, &["eval", "--motions", "m", "--policy", "run/policy.json", "--residual", "ref2/residual.json", "--rollouts", "1", "--set", "env.episode_len=30"]);
}

#[test]
fn incompatible_inputs_fail_before_running() {
    let dir = workspace();
    let d = dir.path();
    tiny_train(d);
    // a three-link arm cannot run two-joint motions or a two-joint policy
    let three = r#"{"links":[{"mass":1,"length":0.3,"actuator":"7520-22.5"},{"mass":1,"length":0.3,"actuator":"7520-22.5"},{"mass":1,"length":0.3,"actuator":"7520-22.5"}]}"#;
    std::fs::write(d.join("three.json"), three).unwrap();
    let out = flowtrack(d, &["train", "--motions", "m", "--env", "three.json", "--out", "bad"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!d.join("bad/policy.json").exists());
    let out = flowtrack(d, &["eval", "--motions", "m", "--policy", "run/policy.json", "--set", "env.history_len=2"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("incompatib"));
    let out = flowtrack(d, &["train", "--motions", "m", "--out", "x", "--set", "distill.bogus=1"]);
    assert_eq!(out.status.code(), Some(1));
}
