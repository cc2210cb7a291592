use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn acl() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_acl"));
    c.env_remove("ACL_THREADS");
    c
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn run(args: &[&str], config: Option<&Path>) -> Output {
    let mut c = acl();
    c.args(args);
    if let Some(p) = config {
        c.arg("--config").arg(p);
    }
    c.output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Rows of a CSV report keyed by column name.
fn rows(csv: &str) -> Vec<std::collections::HashMap<String, String>> {
    let mut r = csv::Reader::from_reader(csv.as_bytes());
    let header: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    r.records().map(|rec| header.iter().cloned().zip(rec.unwrap().iter().map(String::from)).collect()).collect()
}

fn num(s: &str) -> f64 {
    match s {
        "inf" => f64::INFINITY,
        "-inf" => f64::NEG_INFINITY,
        "nan" => f64::NAN,
        _ => s.parse().unwrap(),
    }
}

const ONES4: &str = r#"{"schema": 1, "law": {"kind": "rademacher"}, "coeffs": {"kind": "ones", "n": 4}, "lambdas": [0.5]}"#;

const MC: &str = r#"{
  "schema": 1,
  "law": {"kind": "uniform", "lo": -1.0, "hi": 1.0},
  "coeffs": {"kind": "random-sphere", "n": 12, "d": 1, "seed": 3},
  "lambdas": [0.25, 0.5],
  "method": "monte-carlo",
  "samples": 20000
}"#;

#[test]
fn estimate_q_exact_value_and_row_tags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "q.json", ONES4);
    let o = run(&["estimate-q"], Some(&cfg));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = rows(&stdout(&o));
    assert_eq!(r.len(), 1);
    assert_eq!(num(&r[0]["value"]), 0.375);
    assert_eq!(r[0]["method"], "exact-dp");
    assert_eq!(r[0]["policy_id"], "default-calibrated-v1");
    assert_eq!(r[0]["config_hash"].len(), 64);
}

#[test]
fn monte_carlo_needs_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "mc.json", MC);
    let o = run(&["estimate-q"], Some(&cfg));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("seed"));
    let o = run(&["estimate-q", "--seed", "11"], Some(&cfg));
    assert!(o.status.success());
    assert!(rows(&stdout(&o)).iter().all(|r| r["seed"] == "11"));
}

#[test]
fn json_and_csv_agree() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "mc.json", MC);
    let csv = stdout(&run(&["estimate-q", "--seed", "5"], Some(&cfg)));
    let json: Value = serde_json::from_str(&stdout(&run(&["estimate-q", "--seed", "5", "--format", "json"], Some(&cfg)))).unwrap();
    let jrows = json["rows"].as_array().unwrap();
    let crows = rows(&csv);
    assert_eq!(jrows.len(), crows.len());
    for (j, c) in jrows.iter().zip(&crows) {
        for col in ["lambda", "value", "stderr"] {
            assert_eq!(j[col].as_f64().unwrap().to_bits(), num(&c[col]).to_bits(), "{col}");
        }
        assert_eq!(j["config_hash"].as_str().unwrap(), c["config_hash"]);
    }
}

#[test]
fn config_errors_exit_2_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.json", "{\n  \"schema\": 1,\n  \"bogus\": 3\n}");
    let o = run(&["estimate-q"], Some(&cfg));
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3"), "{err}");
    let schema2 = write(dir.path(), "v2.json", &ONES4.replace("\"schema\": 1", "\"schema\": 2"));
    assert_eq!(run(&["estimate-q"], Some(&schema2)).status.code(), Some(2));
    assert_eq!(run(&["estimate-q"], Some(&dir.path().join("missing.json"))).status.code(), Some(2));
    let cfg = write(dir.path(), "q.json", ONES4);
    assert_eq!(run(&["estimate-q", "--threads", "0"], Some(&cfg)).status.code(), Some(2));
}

#[test]
fn out_flag_and_config_output_block() {
    let dir = tempfile::tempdir().unwrap();
    let with_out = ONES4.replace("\"lambdas\"", "\"output\": {\"path\": \"r.json\", \"format\": \"json\"}, \"lambdas\"");
    let cfg = write(dir.path(), "q.json", &with_out);
    assert!(run(&["estimate-q"], Some(&cfg)).status.success());
    let json: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(json["rows"][0]["value"].as_f64(), Some(0.375));
    let out = dir.path().join("flag.csv");
    let o = run(&["estimate-q", "--out", out.to_str().unwrap(), "--format", "csv"], Some(&cfg));
    assert!(o.status.success() && o.stdout.is_empty());
    let r = rows(&std::fs::read_to_string(&out).unwrap());
    assert_eq!(num(&r[0]["value"]), 0.375);
    // The output block does not enter the hash.
    let plain = write(dir.path(), "plain.json", ONES4);
    let h = rows(&stdout(&run(&["estimate-q"], Some(&plain))))[0]["config_hash"].clone();
    assert_eq!(h, r[0]["config_hash"]);
}

#[test]
fn margin_and_lcd_examples() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "m.json", r#"{"schema": 1, "coeffs": {"rows": [[0.5]]}, "D": [1.0]}"#);
    let r = rows(&stdout(&run(&["margin"], Some(&m))));
    assert!((num(&r[0]["alpha_star"]) - 0.5).abs() < 1e-9);
    assert!(num(&r[0]["certified_lower"]) <= num(&r[0]["alpha_star"]));

    let l = write(
        dir.path(),
        "l.json",
        r#"{"schema": 1, "coeffs": {"kind": "ones", "n": 4}, "gamma": 0.5, "alpha": 0.1, "scan_radius": 4.0}"#,
    );
    let o = run(&["lcd", "--format", "json"], Some(&l));
    let json: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let row = &json["rows"][0];
    assert!((row["D_hat"].as_f64().unwrap() - 0.95).abs() <= 1e-4);
    assert_eq!(row["witness_t"].as_array().unwrap().len(), 1);

    let empty = write(
        dir.path(),
        "e.json",
        r#"{"schema": 1, "coeffs": {"kind": "ones", "n": 4}, "gamma": 0.5, "alpha": 0.1, "scan_radius": 0.5}"#,
    );
    let r = rows(&stdout(&run(&["lcd"], Some(&empty))));
    assert_eq!(r[0]["feasible_found"], "false");
}

#[test]
fn bounds_rows_chain_and_flag_vacuous() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "b.json",
        r#"{"schema": 1, "law": {"kind": "rademacher"}, "coeffs": {"kind": "random-sphere", "n": 10, "d": 2, "seed": 1},
            "bounds": ["thm1", "cor1", "thm2", "cor3", "fs"], "alpha": 8.0, "empirical": "exact"}"#,
    );
    let o = run(&["bounds"], Some(&cfg));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = rows(&stdout(&o));
    let by = |name: &str| r.iter().find(|x| x["bound_name"] == name).unwrap();
    for (a, b) in [("thm1", "cor1"), ("thm2", "cor3")] {
        for col in ["q_radius", "rhs_raw", "rhs_clipped", "components"] {
            assert_eq!(by(a)[col], by(b)[col], "{a} vs {b}: {col}");
        }
    }
    assert_eq!(by("fs")["vacuous"], "true");
    assert_eq!(num(&by("fs")["rhs_clipped"]), 1.0);
    assert!(r.iter().all(|x| x["beta_ge_m1_over_4"] == "true"));
    assert!(r.iter().all(|x| x["holds"] == "true"));
}

#[test]
fn user_policy_is_named_in_rows() {
    let dir = tempfile::tempdir().unwrap();
    let mut policy: Value = serde_json::from_str(&acl_core::ConstantsPolicy::default_calibrated().to_json()).unwrap();
    policy["id"] = "mine".into();
    policy["provenance"] = "user".into();
    let p = write(dir.path(), "p.json", &policy.to_string());
    let cfg = write(dir.path(), "q.json", ONES4);
    let o = run(&["estimate-q", "--policy", p.to_str().unwrap()], Some(&cfg));
    assert_eq!(rows(&stdout(&o))[0]["policy_id"], "mine");
    policy["c_exp"] = (-1.0).into();
    let bad = write(dir.path(), "bad.json", &policy.to_string());
    assert_eq!(run(&["estimate-q", "--policy", bad.to_str().unwrap()], Some(&cfg)).status.code(), Some(2));
}

#[test]
fn rates_slope_and_short_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "r.json",
        r#"{"schema": 1, "law": {"kind": "finite", "atoms": [[1.0, 1.0]]}, "family": "ones", "ns": [4, 8, 16, 32], "lambda": 0.5}"#,
    );
    let r = rows(&stdout(&run(&["rates"], Some(&cfg))));
    assert_eq!(r.len(), 4);
    assert!(num(&r[0]["slope"]).abs() < 1e-12);
    let short = write(
        dir.path(),
        "s.json",
        r#"{"schema": 1, "law": {"kind": "rademacher"}, "family": "ones", "ns": [4, 8, 16], "lambda": 0.5}"#,
    );
    assert_eq!(run(&["rates"], Some(&short)).status.code(), Some(2));
}

#[test]
fn verify_exit_codes() {
    let o = run(&["verify", "cosine"], None);
    assert!(o.status.success());
    let r = rows(&stdout(&o));
    assert!(r.iter().all(|x| x["passed"] == "true" && x["suite"] == "cosine"));
    assert_eq!(run(&["verify", "no-such-suite"], None).status.code(), Some(2));
}

#[test]
fn verify_fails_with_exit_1_under_a_bad_policy() {
    let dir = tempfile::tempdir().unwrap();
    let mut policy: Value = serde_json::from_str(&acl_core::ConstantsPolicy::default_calibrated().to_json()).unwrap();
    policy["id"] = "too-large-c-cos".into();
    policy["c_cos"] = 0.5.into();
    let p = write(dir.path(), "p.json", &policy.to_string());
    let o = run(&["verify", "cosine", "--policy", p.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(1));
}
