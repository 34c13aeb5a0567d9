//! End-to-end tests of the `qboson` binary: flag handling, JSON output,
//! exit codes, and report determinism.

use std::process::{Command, Output};

fn qboson(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qboson"))
        .args(args)
        .env("QBOSON_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn eval_h_matches_the_documented_point() {
    let out = qboson(&[
        "eval", "h", "--r", "1", "--counts", "1", "--q", "1/2", "--z", "2", "--mu", "1", "--x",
        "1",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["coeffs"]["1"], "2/3");
    assert_eq!(v["k"], 1);
    assert_eq!(v["r"], 1);
}

#[test]
fn eval_psi_agrees_with_eval_h() {
    let flags = [
        "--r", "2", "--counts", "1,1", "--q", "1/3", "--z", "3,5", "--mu", "2,1", "--x", "3,1",
    ];
    let h = qboson(&[&["eval", "h"], &flags[..]].concat());
    let p = qboson(&[&["eval", "psi"], &flags[..]].concat());
    assert!(h.status.success() && p.status.success());
    assert_eq!(stdout(&h), stdout(&p));
}

#[test]
fn eval_e_matches_the_documented_point() {
    let out = qboson(&[
        "eval", "E", "--r", "1", "--q", "1/2", "--z", "2", "--mu", "1", "--x", "1",
    ]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "\"1/2\"");
}

#[test]
fn bad_parameters_exit_two() {
    let out = qboson(&[
        "eval", "h", "--r", "1", "--q", "1/2", "--z", "0", "--mu", "1", "--x", "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let out = qboson(&["verify", "--suite", "nonsense"]);
    assert_eq!(out.status.code(), Some(2));
    let out = qboson(&["eval", "h", "--r"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn desk_scale_guard_requires_unsafe() {
    let args = [
        "eval", "h", "--r", "1", "--q", "1/2", "--z", "2,3,5,7,11,13,17", "--mu", "1,1,1,1,1,1,1",
        "--x", "7,6,5,4,3,2,1",
    ];
    let out = qboson(&args);
    assert_eq!(out.status.code(), Some(2));
    let mut with_unsafe: Vec<&str> = args.to_vec();
    with_unsafe.push("--unsafe");
    let out = qboson(&with_unsafe);
    assert!(out.status.success());
}

#[test]
fn verify_reports_are_deterministic_modulo_wall_time() {
    let args = [
        "verify", "--suite", "main", "--r", "2", "--counts", "1,1", "--cases", "3", "--seed",
        "7",
    ];
    let a = qboson(&args);
    let b = qboson(&args);
    assert!(a.status.success() && b.status.success());
    let mut ja: serde_json::Value = serde_json::from_str(&stdout(&a)).unwrap();
    let mut jb: serde_json::Value = serde_json::from_str(&stdout(&b)).unwrap();
    assert_eq!(ja["passed"], 3);
    assert_eq!(ja["cases"], 3);
    ja["wall_ms"] = 0.into();
    jb["wall_ms"] = 0.into();
    assert_eq!(ja, jb);
}

#[test]
fn verify_runs_every_named_suite() {
    for suite in ["hecke", "process", "boson", "ybe", "transfer", "recurrence", "main"] {
        let out = qboson(&[
            "verify", "--suite", suite, "--r", "2", "--counts", "1,1", "--cases", "1", "--seed",
            "3",
        ]);
        assert!(out.status.success(), "suite {suite} failed: {}", stdout(&out));
        let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
        assert_eq!(v["suite"], suite);
        assert_eq!(v["passed"], 1);
        assert_eq!(v["failures"].as_array().unwrap().len(), 0);
    }
}

#[test]
fn generator_check_on_an_explicit_configuration() {
    let out = qboson(&[
        "generator-check",
        "--r",
        "2",
        "--counts",
        "1,1",
        "--q",
        "1/2",
        "--z",
        "2,5",
        "--x",
        "2,1",
        "--nu",
        "1,2",
    ]);
    assert!(out.status.success(), "{}", stdout(&out));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["passed"], 1);
}

#[test]
fn generator_check_samples_configurations() {
    let out = qboson(&[
        "generator-check",
        "--r",
        "2",
        "--counts",
        "2,1",
        "--q",
        "2/5",
        "--z",
        "2,5,7",
        "--cases",
        "4",
        "--seed",
        "11",
    ]);
    assert!(out.status.success(), "{}", stdout(&out));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["cases"], 4);
    assert_eq!(v["passed"], 4);
}

#[test]
fn apply_evaluates_operator_words() {
    let out = qboson(&[
        "apply",
        "--r",
        "1",
        "--q",
        "1/2",
        "--op",
        "C[1,1;a=1](5/2) . bstar[a=1,i=1]",
        "--vacuum",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    // C(z) beta* |vac> = z (1 - q^2) |vac> = 15/8 |vac>
    assert_eq!(v["terms"][0]["coef"], "15/8");
    assert!(v["terms"][0]["occ"].as_object().unwrap().is_empty());
}

#[test]
fn apply_round_trips_ket_json() {
    let ket = r#"{"terms":[{"occ":{"1":[2]},"coef":"1/3"}]}"#;
    let out = qboson(&["apply", "--r", "1", "--q", "1/2", "--op", "qn[1,1,2]", "--ket", ket]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    // q^{2N} scales |2> by q^4 = 1/16: 1/3 * 1/16 = 1/48
    assert_eq!(v["terms"][0]["coef"], "1/48");
}

#[test]
fn mismatched_counts_are_rejected() {
    let out = qboson(&[
        "eval", "h", "--r", "2", "--counts", "2,0", "--q", "1/2", "--z", "2,3", "--mu", "1,2",
        "--x", "2,1",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn output_flag_writes_the_report() {
    let dir = std::env::temp_dir().join("qboson-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("report.json");
    let out = qboson(&[
        "verify", "--suite", "hecke", "--cases", "1", "--seed", "1", "--output",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let body = std::fs::read_to_string(&path).unwrap();
    let v: serde_json::Value = serde_json::from_str(&body).unwrap();
    assert_eq!(v["suite"], "hecke");
    std::fs::remove_file(&path).ok();
}
