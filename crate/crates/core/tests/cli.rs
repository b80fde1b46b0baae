use std::path::PathBuf;
use std::process::{Command, Output};

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("configs")
        .join(name)
}

fn dselab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dselab"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn region_run_succeeds_with_csv_on_stdout() {
    let cfg = config("region_uniform.json");
    let o = dselab(&["region", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.starts_with("kind,a,b,sense,c,seed,version"));
    assert_eq!(out.lines().count(), 7);
    assert!(stderr(&o).contains("nonempty=true"));
}

#[test]
fn output_does_not_depend_on_worker_count() {
    let cfg = config("simulate_dsbs.json");
    let one = dselab(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--workers",
        "1",
    ]);
    let two = dselab(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--workers",
        "2",
    ]);
    assert_eq!(one.status.code(), Some(0), "{}", stderr(&one));
    assert_eq!(one.stdout, two.stdout);
    let again = dselab(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--workers",
        "2",
    ]);
    assert_eq!(two.stdout, again.stdout);
}

#[test]
fn out_path_receives_table_and_attachments() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("preimage.csv");
    let cfg = config("verify_lemma1.json");
    let o = dselab(&[
        "verify-lemma1",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
    let main = std::fs::read_to_string(&out).unwrap();
    assert_eq!(main.lines().count(), 11);
    let checks = std::fs::read_to_string(dir.path().join("preimage.checks.csv")).unwrap();
    assert!(checks.starts_with("system,seed,check,worst_case_value,bound,pass"));
    assert!(checks.contains("preimage_overlap"));
}

#[test]
fn seed_override_replaces_configured_seeds() {
    let cfg = config("verify_lemma1.json");
    let o = dselab(&[
        "verify-lemma1",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "100",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let seeds: Vec<&str> = out
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(9).unwrap())
        .collect();
    let expected: Vec<String> = (100..110).map(|s| s.to_string()).collect();
    assert_eq!(seeds, expected);
}

#[test]
fn failing_trend_exits_with_one() {
    let cfg = config("strong_converse_below.json");
    let o = dselab(&["strong-converse", "--config", cfg.to_str().unwrap()]);
    let err = stderr(&o);
    assert_eq!(o.status.code(), Some(1), "{err}");
    assert!(err.contains("final_above_0.9=false"), "{err}");
    assert!(err.contains("check(s) failed"));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let cfg = config("region_uniform.json");
    let o = dselab(&[
        "region",
        "--config",
        cfg.to_str().unwrap(),
        "--no-such-flag",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_errors_name_the_field_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(
        &path,
        "{\n  \"mode\": \"region\",\n  \"source\": {\"q1\": 2, \"q2\": 2, \"probs\": [0.25, 0.25, 0.25, 0.25]},\n  \"key\": {\"q1\": 2, \"q2\": 2, \"probz\": []}\n}\n",
    )
    .unwrap();
    let o = dselab(&["region", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("key"), "{err}");
    assert!(err.contains("line 4"), "{err}");
}

#[test]
fn mode_mismatch_and_missing_files_exit_with_two() {
    let cfg = config("region_uniform.json");
    let o = dselab(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error:"));
    let o = dselab(&["region", "--config", "/nonexistent/config.json"]);
    assert_eq!(o.status.code(), Some(2));
}
