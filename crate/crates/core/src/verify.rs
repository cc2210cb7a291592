//! Named verification suites: oracle agreement, identities, inequalities, rates
//! and bound stress tests. Each check is re-evaluated from scratch, never taken
//! from an optimizer's own claim.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{condition_margin, MarginOptions};
use crate::bounds::{
    cor1_bound, cor2_bound, cor3_bound, cor4_bound, fmt_num, fs_bound, thm1_alpha_threshold, thm1_bound,
    thm2_bound, ConstantsPolicy,
};
use crate::calibrate::{esseen_calibration_suite, esseen_holdout_suite, symmetrized_rademacher};
use crate::charfn::{cf_h, esseen_lower, esseen_upper, one_minus_cos, periodic_dist, IntegrationOptions};
use crate::coeffs::{check_small_projection_identity, gram, CoefficientMatrix};
use crate::concentration::{exact_distribution, exact_q, mc_q};
use crate::error::{domain, Result};
use crate::law::{law_zoo, symmetrize, ScalarLaw};
use crate::rates::{dyadic_grid, rate_experiment, Family};
use crate::seed;

pub const SUITES: [&str; 9] =
    ["identities", "scaling", "shell-mass", "sandwich", "cosine", "oracle", "rates", "thm1-sweep", "refinement"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub suite: String,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

fn check(suite: &str, name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Check {
    Check { suite: suite.into(), name: name.into(), passed, detail: detail.into() }
}

/// Runs one suite, or every suite in order for `"all"`.
pub fn run_suite(name: &str, policy: &ConstantsPolicy) -> Result<Vec<SuiteReport>> {
    if name == "all" {
        return SUITES.iter().map(|s| run_one(s, policy)).collect();
    }
    Ok(vec![run_one(name, policy)?])
}

fn run_one(name: &str, policy: &ConstantsPolicy) -> Result<SuiteReport> {
    let checks = match name {
        "identities" => identities()?,
        "scaling" => scaling(policy)?,
        "shell-mass" => shell_mass()?,
        "sandwich" => sandwich(policy)?,
        "cosine" => cosine(policy),
        "oracle" => oracle()?,
        "rates" => rates()?,
        "thm1-sweep" => thm1_sweep(policy)?,
        "refinement" => refinement(policy)?,
        other => return domain(format!("unknown suite {other:?}; known: {}, all", SUITES.join(", "))),
    };
    Ok(SuiteReport { suite: name.into(), checks })
}

/// `dist(t . a, Z^n)^2 = sum <t, a_k>^2` whenever every `|<t, a_k>| <= 1/2`.
pub fn identities() -> Result<Vec<Check>> {
    let mut rng = seed::rng_for(0x4_5, 0);
    let mut worst = 0.0_f64;
    let trials = 1000;
    for i in 0..trials {
        let n = rng.random_range(1..=12);
        let d = rng.random_range(1..=4);
        let a = CoefficientMatrix::random_sphere(n, d, 1000 + i, rng.random_range(0.1..5.0))?;
        let dir: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let scale = a.project(&dir)?.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        let target = 0.5 * rng.random::<f64>();
        let t: Vec<f64> = dir.iter().map(|x| x * target / scale.max(f64::MIN_POSITIVE)).collect();
        let (lhs, rhs) = check_small_projection_identity(&a, &t)?;
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(vec![check(
        "identities",
        "small-projection-distance",
        worst <= 1e-12,
        format!("{trials} random instances, max |lhs - rhs| = {}", fmt_num(worst)),
    )])
}

/// `H_{z,g}(t) = H_{y,g}(z t / y)`, `H_{z,g} = H_{z,1}^g`, the scaled-coefficient
/// identity for `Q`, and the bound reduction chains.
pub fn scaling(policy: &ConstantsPolicy) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let mut rng = seed::rng_for(0x5CA1E, 0);
    let (mut worst_h, mut worst_pow) = (0.0_f64, 0.0_f64);
    for i in 0..500 {
        let d = rng.random_range(1..=3);
        let a = CoefficientMatrix::random_sphere(rng.random_range(1..=10), d, 50 + i, 1.0)?;
        let t: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
        let (z, y, g) = (rng.random_range(0.1..4.0), rng.random_range(0.1..4.0), rng.random_range(0.05..3.0));
        let zt: Vec<f64> = t.iter().map(|x| z * x / y).collect();
        worst_h = worst_h.max((cf_h(z, g, &a, &t)? - cf_h(y, g, &a, &zt)?).abs());
        worst_pow = worst_pow.max((cf_h(z, g, &a, &t)? - cf_h(z, 1.0, &a, &t)?.powf(g)).abs());
    }
    out.push(check("scaling", "H-rescaling", worst_h <= 1e-12, format!("max deviation {}", fmt_num(worst_h))));
    out.push(check("scaling", "H-power", worst_pow <= 1e-12, format!("max deviation {}", fmt_num(worst_pow))));

    // Q(V_{a,tau}, r) = Q(F_a, tau r), bitwise on dyadic inputs.
    let law = ScalarLaw::finite([(-0.5, 0.25), (0.25, 0.5), (1.5, 0.25)])?;
    let instances = [
        CoefficientMatrix::scalar(&[1.0, 0.75, 2.5, 0.125, 1.0])?,
        CoefficientMatrix::from_rows(&[[1.0, 0.0], [0.5, 0.75], [-0.25, 1.0], [0.375, -0.5]])?,
    ];
    let mut mismatches = 0;
    let mut total = 0;
    for a in &instances {
        let base = exact_distribution(&law, a)?;
        for tau in [0.25, 0.5, 2.0, 4.0] {
            let scaled = exact_distribution(&law, &a.scaled(1.0 / tau))?;
            for r in [0.0, 0.125, 0.5, 1.0, 3.0] {
                let lhs = scaled.concentration(r)?;
                let rhs = base.concentration(tau * r)?;
                total += 1;
                if lhs.value != rhs.value || lhs.conservative() != rhs.conservative() {
                    mismatches += 1;
                }
            }
        }
    }
    out.push(check(
        "scaling",
        "Q-coefficient-rescaling",
        mismatches == 0,
        format!("{total} exact comparisons, {mismatches} mismatches"),
    ));

    let sym = symmetrize(&ScalarLaw::LazyRademacher { hold_prob: 0.25 })?;
    let m1 = sym.m_of_tau(1.0)?;
    let mut broken = Vec::new();
    for d in 1..=6usize {
        let rd = (d as f64).sqrt();
        for (det_n, alpha, gamma) in [(0.5, 0.0, 0.3), (4.0, 1.7, 0.5), (250.0, 9.0, 0.9)] {
            let t1 = thm1_bound(m1, det_n, d, alpha, policy)?.rhs_raw;
            let c1 = cor1_bound(m1, det_n, d, alpha, rd, policy)?.rhs_raw;
            let c2 = cor2_bound(&sym, det_n, d, alpha, rd, 1.0, policy)?.rhs_raw;
            let t2 = thm2_bound(m1, det_n, d, alpha, gamma, policy)?.rhs_raw;
            let c3 = cor3_bound(m1, det_n, d, alpha, gamma, rd, policy)?.rhs_raw;
            let c4 = cor4_bound(&sym, det_n, d, alpha, gamma, rd, 1.0, policy)?.rhs_raw;
            if t1.to_bits() != c1.to_bits() || c1.to_bits() != c2.to_bits() {
                broken.push(format!("cor1/cor2 vs thm1 at d={d}"));
            }
            if t2.to_bits() != c3.to_bits() || c3.to_bits() != c4.to_bits() {
                broken.push(format!("cor3/cor4 vs thm2 at d={d}"));
            }
        }
    }
    out.push(check(
        "scaling",
        "reduction-chains",
        broken.is_empty(),
        if broken.is_empty() { "bit-exact on 18 input sets".to_string() } else { broken.join("; ") },
    ));
    Ok(out)
}

/// `beta >= M(1)/4` across the law zoo.
pub fn shell_mass() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for law in law_zoo() {
        let sym = symmetrize(&law)?;
        let m1 = sym.m_of_tau(1.0)?;
        let tol = if law.is_discrete() { 0.0 } else { 1e-8 };
        let beta = sym.beta();
        out.push(check(
            "shell-mass",
            law.name(),
            beta >= m1 / 4.0 - tol,
            format!("beta = {}, M(1)/4 = {}", fmt_num(beta), fmt_num(m1 / 4.0)),
        ));
    }
    Ok(out)
}

/// Calibrated Esseen constants bracket exact `Q(F, sqrt d)` on symmetrized laws.
pub fn sandwich(policy: &ConstantsPolicy) -> Result<Vec<Check>> {
    let sym = symmetrized_rademacher();
    let opts = IntegrationOptions::with_seed(0xE55E);
    let named: Vec<(&str, _)> = esseen_calibration_suite()
        .into_iter()
        .map(|i| ("calibration", i))
        .chain(esseen_holdout_suite().into_iter().map(|i| ("holdout", i)))
        .collect();
    named
        .par_iter()
        .map(|(group, inst)| {
            let a = &inst.a;
            let d = a.d();
            let q = exact_distribution(sym.base(), a)?.concentration((d as f64).sqrt())?;
            let up = esseen_upper(&sym, a, policy, &opts)?;
            let low = esseen_lower(&sym, a, policy, &opts)?;
            let low_edge = low.constant * (low.integral.value - 3.0 * low.integral.stderr);
            let up_edge = up.constant * (up.integral.value + 3.0 * up.integral.stderr);
            let passed = low_edge <= q.value && q.conservative() <= up_edge;
            Ok(check(
                "sandwich",
                format!("{group}:{} (d={d})", inst.name),
                passed,
                format!(
                    "{} <= Q in [{}, {}] <= {}",
                    fmt_num(low.value),
                    fmt_num(q.value),
                    fmt_num(q.conservative()),
                    fmt_num(up.value)
                ),
            ))
        })
        .collect()
}

/// `1 - cos x >= c x^2` on `|x| <= pi` and `>= c dist(x, 2 pi Z)^2` everywhere.
pub fn cosine(policy: &ConstantsPolicy) -> Vec<Check> {
    let c = policy.c_cos;
    let pi = std::f64::consts::PI;
    let points = 100_000;
    let (mut worst_a, mut worst_b) = (f64::INFINITY, f64::INFINITY);
    for i in 0..=points {
        let x = -pi + 2.0 * pi * i as f64 / points as f64;
        worst_a = worst_a.min(one_minus_cos(x) - c * x * x);
        let y = -20.0 * pi + 40.0 * pi * i as f64 / points as f64;
        worst_b = worst_b.min(one_minus_cos(y) - c * periodic_dist(y).powi(2));
    }
    vec![
        check("cosine", "quadratic-on-period", worst_a >= -1e-12, format!("min slack {}", fmt_num(worst_a))),
        check("cosine", "periodic-distance", worst_b >= -1e-12, format!("min slack {}", fmt_num(worst_b))),
    ]
}

/// The fixed oracle-agreement instances: `(label, law, coefficients, lambda)`.
pub fn oracle_fixtures() -> Vec<(String, ScalarLaw, CoefficientMatrix, f64)> {
    let mut out = Vec::new();
    let three = ScalarLaw::finite([(0.0, 0.5), (1.0, 0.25), (3.0, 0.25)]).expect("valid");
    let specs: Vec<(&str, ScalarLaw, CoefficientMatrix, f64)> = vec![
        ("rademacher ones(4)", ScalarLaw::Rademacher, CoefficientMatrix::ones(4).unwrap(), 0.5),
        ("rademacher ones(12)", ScalarLaw::Rademacher, CoefficientMatrix::ones(12).unwrap(), 0.5),
        ("rademacher ones(4)", ScalarLaw::Rademacher, CoefficientMatrix::ones(4).unwrap(), 1.0),
        ("rademacher ones(7)", ScalarLaw::Rademacher, CoefficientMatrix::ones(7).unwrap(), 0.5),
        ("rademacher ones(20)", ScalarLaw::Rademacher, CoefficientMatrix::ones(20).unwrap(), 0.5),
        ("rademacher ones(20)", ScalarLaw::Rademacher, CoefficientMatrix::ones(20).unwrap(), 3.0),
        ("rademacher arith(6)", ScalarLaw::Rademacher, CoefficientMatrix::arith(6).unwrap(), 0.5),
        ("rademacher arith(10)", ScalarLaw::Rademacher, CoefficientMatrix::arith(10).unwrap(), 0.5),
        ("rademacher arith(15)", ScalarLaw::Rademacher, CoefficientMatrix::arith(15).unwrap(), 2.0),
        ("rademacher arith(20)", ScalarLaw::Rademacher, CoefficientMatrix::arith(20).unwrap(), 5.0),
        ("lazy(0.5) ones(10)", ScalarLaw::LazyRademacher { hold_prob: 0.5 }, CoefficientMatrix::ones(10).unwrap(), 0.5),
        ("lazy(0.2) arith(8)", ScalarLaw::LazyRademacher { hold_prob: 0.2 }, CoefficientMatrix::arith(8).unwrap(), 1.0),
        ("lazy(0.8) ones(16)", ScalarLaw::LazyRademacher { hold_prob: 0.8 }, CoefficientMatrix::ones(16).unwrap(), 0.5),
        ("three-point ones(6)", three.clone(), CoefficientMatrix::ones(6).unwrap(), 0.5),
        ("three-point ones(9)", three.clone(), CoefficientMatrix::ones(9).unwrap(), 1.5),
        ("three-point arith(5)", three.clone(), CoefficientMatrix::arith(5).unwrap(), 1.0),
        (
            "rademacher mixed",
            ScalarLaw::Rademacher,
            CoefficientMatrix::scalar(&[1.0, 0.5, 0.25, 0.75, 1.5, 2.0, 0.125, 1.0]).unwrap(),
            0.3,
        ),
        (
            "three-point mixed",
            three,
            CoefficientMatrix::scalar(&[1.0, 0.5, 2.0, 0.25, 1.25]).unwrap(),
            0.6,
        ),
        ("point mass ones(5)", ScalarLaw::point_mass(2.0), CoefficientMatrix::ones(5).unwrap(), 0.5),
        (
            "biased two-point ones(14)",
            ScalarLaw::finite([(0.0, 0.7), (1.0, 0.3)]).expect("valid"),
            CoefficientMatrix::ones(14).unwrap(),
            0.5,
        ),
    ];
    for (label, law, a, lambda) in specs {
        out.push((format!("{label} lambda={lambda}"), law, a, lambda));
    }
    out
}

pub const ORACLE_SAMPLES: usize = 100_000;

/// Monte Carlo within `3 stderr` of the exact oracle.
pub fn oracle() -> Result<Vec<Check>> {
    oracle_fixtures()
        .iter()
        .enumerate()
        .map(|(i, (label, law, a, lambda))| {
            let exact = exact_q(law, a, *lambda)?.value;
            let mc = mc_q(law, a, *lambda, ORACLE_SAMPLES, 0x0AC1E + i as u64)?;
            let gap = (mc.value - exact).abs();
            Ok(check(
                "oracle",
                label.clone(),
                gap <= 3.0 * mc.stderr,
                format!("exact {} mc {} stderr {}", fmt_num(exact), fmt_num(mc.value), fmt_num(mc.stderr)),
            ))
        })
        .collect()
}

/// Classical decay rates of `Q` in `n` for Rademacher sums.
pub fn rates() -> Result<Vec<Check>> {
    let ones = rate_experiment(&ScalarLaw::Rademacher, Family::Ones, &dyadic_grid(4, 14), 0.5)?;
    let arith = rate_experiment(&ScalarLaw::Rademacher, Family::Arith, &[16, 32, 64, 128, 256], 0.5)?;
    let flat = rate_experiment(&ScalarLaw::point_mass(1.0), Family::Ones, &dyadic_grid(2, 6), 0.5)?;
    Ok(vec![
        check(
            "rates",
            "ones(n) slope -1/2",
            (ones.fit.slope + 0.5).abs() <= 0.15,
            format!("slope {} (95% CI [{}, {}])", fmt_num(ones.fit.slope), fmt_num(ones.fit.ci_low), fmt_num(ones.fit.ci_high)),
        ),
        check(
            "rates",
            "arith(n) slope -3/2",
            (arith.fit.slope + 1.5).abs() <= 0.25,
            format!("slope {} (95% CI [{}, {}])", fmt_num(arith.fit.slope), fmt_num(arith.fit.ci_low), fmt_num(arith.fit.ci_high)),
        ),
        check("rates", "point mass slope 0", flat.fit.slope.abs() <= 1e-12, format!("slope {}", fmt_num(flat.fit.slope))),
    ])
}

pub const SWEEP_INSTANCES: u64 = 50;
pub const SWEEP_SAMPLES: usize = 100_000;

/// Empirical `Q(F_a, sqrt 2)` against `thm1` over random-sphere instances.
pub fn thm1_sweep(policy: &ConstantsPolicy) -> Result<Vec<Check>> {
    let law = ScalarLaw::Rademacher;
    let sym = symmetrize(&law)?;
    let m1 = sym.m_of_tau(1.0)?;
    let d = 2;
    let rd = (d as f64).sqrt();
    (0..SWEEP_INSTANCES)
        .map(|i| {
            let a = CoefficientMatrix::random_sphere(32, d, 0x7E57 + i, 1.0)?;
            let det_n = gram(&a).determinant;
            let margin = condition_margin(&a, rd, &MarginOptions::default())?;
            let report = thm1_bound(m1, det_n, d, margin.certified_lower, policy)?;
            let q = mc_q(&law, &a, report.q_radius, SWEEP_SAMPLES, 0x5EE9 + i)?;
            let report = report.with_empirical(q);
            let q = report.empirical_q.as_ref().expect("attached");
            Ok(check(
                "thm1-sweep",
                format!("sphere(32,2,{})", 0x7E57 + i),
                report.holds == Some(true),
                format!(
                    "Q {} +- {} vs rhs {} (alpha {}, det N {})",
                    fmt_num(q.value),
                    fmt_num(q.stderr),
                    fmt_num(report.rhs_clipped),
                    fmt_num(margin.certified_lower),
                    fmt_num(det_n)
                ),
            ))
        })
        .collect()
}

/// A law with `Q(L(X), 1) = 1` (so `p = 0`) where `thm1` stays informative.
pub fn refinement(policy: &ConstantsPolicy) -> Result<Vec<Check>> {
    let law = ScalarLaw::Rademacher;
    let q_base = law.concentration(1.0);
    let p = 1.0 - q_base;
    let sym = symmetrize(&law)?;
    let m1 = sym.m_of_tau(1.0)?;
    let a = CoefficientMatrix::ones(64)?;
    let d = 1;
    let det_n = gram(&a).determinant;
    let mut out = vec![check(
        "refinement",
        "p = 0 while M(1) > 0",
        p == 0.0 && m1 == 0.5,
        format!("Q(L(X), 1) = {}, M(1) = {}", fmt_num(q_base), fmt_num(m1)),
    )];
    let Some(threshold) = thm1_alpha_threshold(m1, det_n, d, policy)? else {
        out.push(check("refinement", "thm1 informative", false, "prefactor alone is >= 1 under this policy"));
        return Ok(out);
    };
    let exact = exact_q(&law, &a, 1.0)?;
    for factor in [1.25, 2.0, 4.0] {
        let alpha = threshold * factor;
        let thm1 = thm1_bound(m1, det_n, d, alpha, policy)?;
        let fs = fs_bound(p, det_n, d, alpha, 1.0, policy)?;
        out.push(check(
            "refinement",
            format!("alpha = {factor} x threshold"),
            fs.vacuous && thm1.rhs_raw < 1.0 && exact.value <= thm1.rhs_clipped,
            format!(
                "threshold {}, thm1 rhs {}, fs vacuous {}, exact Q(F_a, 1) {}",
                fmt_num(threshold),
                fmt_num(thm1.rhs_raw),
                fs.vacuous,
                fmt_num(exact.value)
            ),
        ));
    }
    Ok(out)
}
