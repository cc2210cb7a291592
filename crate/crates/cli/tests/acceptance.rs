//! Acceptance run: one PASS/FAIL line per criterion, then a nonzero exit if
//! any criterion failed.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use acl_core::verify::{self, Check};
use acl_core::ConstantsPolicy;

struct Outcome {
    passed: bool,
    detail: String,
}

fn from_checks(checks: acl_core::Result<Vec<Check>>) -> Outcome {
    match checks {
        Err(e) => Outcome { passed: false, detail: format!("error: {e}") },
        Ok(checks) => {
            let bad: Vec<&Check> = checks.iter().filter(|c| !c.passed).collect();
            let detail = if bad.is_empty() {
                format!("{} checks", checks.len())
            } else {
                bad.iter().map(|c| format!("{}: {}", c.name, c.detail)).collect::<Vec<_>>().join("; ")
            };
            Outcome { passed: bad.is_empty() && !checks.is_empty(), detail }
        }
    }
}

fn criterion(id: u32, title: &str, limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = f();
    let took = start.elapsed();
    let in_time = limit.is_none_or(|l| took <= l);
    let ok = out.passed && in_time;
    let budget = limit.map(|l| format!(" (limit {}s)", l.as_secs())).unwrap_or_default();
    let late = if in_time { String::new() } else { " over time limit;".into() };
    println!(
        "{} {id:>2} {title} [{:.2}s{budget}]{late} {}",
        if ok { "PASS" } else { "FAIL" },
        took.as_secs_f64(),
        out.detail
    );
    ok
}

const STOCHASTIC: [(&str, &str); 5] = [
    (
        "estimate-q",
        r#"{"schema": 1, "law": {"kind": "gaussian", "mean": 0.0, "stddev": 1.0},
            "coeffs": {"kind": "random-sphere", "n": 32, "d": 2, "seed": 7},
            "lambdas": [0.5, 1.0, 1.4142135623730951], "method": "monte-carlo", "samples": 100000, "seed": 2024}"#,
    ),
    (
        "estimate-q",
        r#"{"schema": 1, "law": {"kind": "uniform", "lo": -1.0, "hi": 1.0}, "coeffs": {"kind": "ones", "n": 20},
            "lambdas": [0.25, 1.0], "samples": 50000, "seed": 17}"#,
    ),
    (
        "bounds",
        r#"{"schema": 1, "law": {"kind": "rademacher"}, "coeffs": {"kind": "random-sphere", "n": 32, "d": 2, "seed": 7},
            "empirical": "monte-carlo", "samples": 100000, "seed": 99}"#,
    ),
    ("margin", r#"{"schema": 1, "coeffs": {"kind": "random-sphere", "n": 16, "d": 2, "seed": 4}, "D": [0.5, 1.5], "gamma": 0.5}"#),
    ("lcd", r#"{"schema": 1, "coeffs": {"kind": "arith", "n": 6}, "gamma": 0.5, "alpha": 0.2, "scan_radius": 3.0}"#),
];

fn run_acl(cmd: &str, config: &Path, threads: &str, format: &str) -> Result<Vec<u8>, String> {
    let o = Command::new(env!("CARGO_BIN_EXE_acl"))
        .args([cmd, "--config"])
        .arg(config)
        .args(["--threads", threads, "--format", format])
        .output()
        .map_err(|e| e.to_string())?;
    if !o.status.success() {
        return Err(format!("{cmd} exited {:?}: {}", o.status.code(), String::from_utf8_lossy(&o.stderr)));
    }
    Ok(o.stdout)
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().expect("tempdir");
    let mut compared = 0;
    for (i, (cmd, body)) in STOCHASTIC.iter().enumerate() {
        let cfg = dir.path().join(format!("c{i}.json"));
        std::fs::write(&cfg, body).expect("write config");
        for format in ["csv", "json"] {
            let one = run_acl(cmd, &cfg, "1", format);
            let eight = run_acl(cmd, &cfg, "8", format);
            match (one, eight) {
                (Ok(a), Ok(b)) if a == b && !a.is_empty() => compared += 1,
                (Ok(_), Ok(_)) => {
                    return Outcome { passed: false, detail: format!("{cmd} ({format}) differs between 1 and 8 threads") }
                }
                (Err(e), _) | (_, Err(e)) => return Outcome { passed: false, detail: e },
            }
        }
    }
    Outcome { passed: true, detail: format!("{compared} outputs byte-identical at 1 and 8 threads") }
}

fn main() {
    let policy = ConstantsPolicy::default_calibrated();
    let secs = |s| Some(Duration::from_secs(s));
    let results = [
        criterion(1, "oracle agreement, Monte Carlo vs exact on 20 fixtures", secs(30), || from_checks(verify::oracle())),
        criterion(2, "beta >= M(1)/4 across the law zoo", secs(5), || from_checks(verify::shell_mass())),
        criterion(3, "lattice distance identity for small projections", secs(1), || from_checks(verify::identities())),
        criterion(4, "scaling identities and reduction chains", None, || from_checks(verify::scaling(policy))),
        criterion(5, "Esseen sandwich with frozen calibrated constants", secs(120), || {
            from_checks(verify::sandwich(policy))
        }),
        criterion(6, "cosine inequalities on a 1e5 grid", None, || Outcome::from(verify::cosine(policy))),
        criterion(7, "thm1 stress sweep, 50 instances", secs(600), || from_checks(verify::thm1_sweep(policy))),
        criterion(8, "classical decay rates", secs(120), || from_checks(verify::rates())),
        criterion(9, "refinement over the p form", None, || from_checks(verify::refinement(policy))),
        criterion(10, "determinism across thread counts", None, determinism),
    ];
    let failed = results.iter().filter(|ok| !**ok).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

impl From<Vec<Check>> for Outcome {
    fn from(checks: Vec<Check>) -> Outcome {
        from_checks(Ok(checks))
    }
}
