//! One function per subcommand; each returns the table to write.

use acl_core::bounds::thm1_alpha_threshold;
use acl_core::calibrate::calibrate;
use acl_core::rates::rate_experiment;
use acl_core::verify::{run_suite, SuiteReport};
use acl_core::{
    condition_margin, condition_margin_gamma, draw_samples, essential_lcd, exact_distribution, CoefficientMatrix, CompareInstance, ConcentrationEstimate, ConstantsPolicy, EmpiricalMode, Error, Family,
    ScalarLaw,
};
use crate::config::{
    hash_value, BoundsConfig, EstimateConfig, EstimateMethod, FamilySpec, LcdConfig, Loaded, MarginConfig,
    RatesConfig,
};
use crate::table::{Cell, Table};
use crate::CliError;

fn law_of(spec: &acl_core::LawSpec) -> Result<ScalarLaw, CliError> {
    ScalarLaw::try_from(spec.clone()).map_err(|e| CliError::Config(format!("law: {e}")))
}

fn coeffs_of(spec: &acl_core::CoefficientSpec) -> Result<CoefficientMatrix, CliError> {
    CoefficientMatrix::try_from(spec).map_err(|e| CliError::Config(format!("coeffs: {e}")))
}

fn require_seed(seed: Option<u64>, what: &str) -> Result<u64, CliError> {
    seed.ok_or_else(|| CliError::Config(format!("{what} uses Monte Carlo and needs a seed (config \"seed\" or --seed)")))
}

pub const ESTIMATE_COLUMNS: [&str; 10] =
    ["lambda", "value", "stderr", "method", "n", "d", "seed", "upper", "witness_center", "note"];

pub fn estimate_q(loaded: &Loaded<EstimateConfig>, policy: &ConstantsPolicy) -> Result<Table, CliError> {
    let cfg = &loaded.config;
    let law = law_of(&cfg.law)?;
    let a = coeffs_of(&cfg.coeffs)?;
    if cfg.lambdas.is_empty() {
        return Err(CliError::Config("lambdas must not be empty".into()));
    }
    if cfg.method == EstimateMethod::MonteCarlo {
        require_seed(cfg.seed, "method monte-carlo")?;
    }
    let exact = match cfg.method {
        EstimateMethod::MonteCarlo => None,
        EstimateMethod::Exact => Some(exact_distribution(&law, &a)?),
        EstimateMethod::Auto if !law.is_discrete() => None,
        EstimateMethod::Auto => match exact_distribution(&law, &a) {
            Ok(dist) => Some(dist),
            Err(Error::Capacity(_) | Error::Unsupported(_)) => None,
            Err(e) => return Err(e.into()),
        },
    };
    let (estimates, seed): (Vec<ConcentrationEstimate>, Option<u64>) = match exact {
        Some(dist) => (cfg.lambdas.iter().map(|&l| dist.concentration(l)).collect::<Result<_, _>>()?, None),
        None => {
            let seed = require_seed(cfg.seed, "this instance")?;
            let sample = draw_samples(&law, &a, cfg.samples, seed)?;
            (cfg.lambdas.iter().map(|&l| sample.concentration(l)).collect::<Result<_, _>>()?, Some(seed))
        }
    };
    let mut t = Table::new("estimate-q", &ESTIMATE_COLUMNS, &loaded.hash, &policy.id);
    for e in estimates {
        t.push(vec![
            e.lambda.into(),
            e.value.into(),
            e.stderr.into(),
            e.method.as_str().into(),
            a.n().into(),
            a.d().into(),
            seed.map(Cell::Int).unwrap_or(Cell::Empty),
            Cell::opt(e.upper),
            e.witness_center.into(),
            e.note.map(Cell::Str).unwrap_or(Cell::Empty),
        ]);
    }
    Ok(t)
}

pub fn margin(loaded: &Loaded<MarginConfig>, policy: &ConstantsPolicy) -> Result<Table, CliError> {
    let cfg = &loaded.config;
    let a = coeffs_of(&cfg.coeffs)?;
    if cfg.radii.is_empty() {
        return Err(CliError::Config("D must list at least one radius".into()));
    }
    let columns =
        ["D", "gamma", "alpha_star", "certified_lower", "grid_step", "covering_radius", "vacuous", "witness_t"];
    let mut t = Table::new("margin", &columns, &loaded.hash, &policy.id);
    for &radius in &cfg.radii {
        let m = match cfg.gamma {
            Some(g) => condition_margin_gamma(&a, radius, g, &cfg.search)?,
            None => condition_margin(&a, radius, &cfg.search)?,
        };
        t.push(vec![
            m.radius.into(),
            Cell::opt(m.gamma),
            m.alpha_star.into(),
            m.certified_lower.into(),
            m.grid_step.into(),
            m.covering_radius.into(),
            m.vacuous.into(),
            m.witness_t.into(),
        ]);
    }
    Ok(t)
}

pub fn lcd(loaded: &Loaded<LcdConfig>, policy: &ConstantsPolicy) -> Result<Table, CliError> {
    let cfg = &loaded.config;
    let a = coeffs_of(&cfg.coeffs)?;
    let r = essential_lcd(&a, cfg.gamma, cfg.alpha, cfg.scan_radius, &cfg.search)?;
    let columns = ["gamma", "alpha", "D_hat", "feasible_found", "scan_radius", "grid_step", "witness_t"];
    let mut t = Table::new("lcd", &columns, &loaded.hash, &policy.id);
    t.push(vec![
        r.gamma.into(),
        r.alpha.into(),
        r.d_hat.into(),
        r.feasible_found.into(),
        r.scan_radius.into(),
        r.grid_step.into(),
        r.witness_t.into(),
    ]);
    Ok(t)
}

pub const BOUNDS_COLUMNS: [&str; 25] = [
    "bound_name",
    "m",
    "det_n",
    "d",
    "alpha",
    "gamma",
    "D",
    "tau",
    "n",
    "p",
    "lambda",
    "q_radius",
    "rhs_raw",
    "rhs_clipped",
    "vacuous",
    "components",
    "empirical_q",
    "stderr",
    "method",
    "holds",
    "m1",
    "beta",
    "beta_ge_m1_over_4",
    "lambda_min",
    "alpha_threshold",
];

pub fn bounds(loaded: &Loaded<BoundsConfig>, policy: &ConstantsPolicy) -> Result<Table, CliError> {
    let cfg = &loaded.config;
    let law = law_of(&cfg.law)?;
    let a = coeffs_of(&cfg.coeffs)?;
    if cfg.empirical == EmpiricalMode::MonteCarlo {
        require_seed(cfg.seed, "empirical monte-carlo")?;
    }
    let mut inst = CompareInstance::new(law, a, cfg.bounds.clone());
    inst.radius_d = cfg.radius_d;
    inst.tau = cfg.tau;
    inst.gamma = cfg.gamma;
    inst.alpha = cfg.alpha;
    inst.p = cfg.p;
    inst.lambda = cfg.lambda;
    inst.empirical = cfg.empirical;
    inst.samples = cfg.samples;
    inst.seed = cfg.seed;
    inst.margin = cfg.margin;
    let cmp = acl_core::compare(&inst, policy)?;
    let s = &cmp.summary;
    let threshold = thm1_alpha_threshold(s.m1, s.det_n, s.d, policy).ok().flatten();
    let mut t = Table::new("bounds", &BOUNDS_COLUMNS, &loaded.hash, &policy.id);
    for r in &cmp.reports {
        let i = &r.inputs;
        let q = r.empirical_q.as_ref();
        let components =
            r.components.iter().map(|c| format!("{}={}", c.name, acl_core::bounds::fmt_num(c.value))).collect::<Vec<_>>();
        t.push(vec![
            r.bound_name.as_str().into(),
            Cell::opt(i.m),
            Cell::opt(i.det_n),
            i.d.map(Cell::from).unwrap_or(Cell::Empty),
            Cell::opt(i.alpha),
            Cell::opt(i.gamma),
            Cell::opt(i.radius_d),
            Cell::opt(i.tau),
            i.n.map(Cell::from).unwrap_or(Cell::Empty),
            Cell::opt(i.p),
            Cell::opt(i.lambda),
            r.q_radius.into(),
            r.rhs_raw.into(),
            r.rhs_clipped.into(),
            r.vacuous.into(),
            components.join(";").into(),
            Cell::opt(q.map(|q| q.conservative())),
            Cell::opt(q.map(|q| q.stderr)),
            q.map(|q| Cell::from(q.method.as_str())).unwrap_or(Cell::Empty),
            r.holds.map(Cell::Bool).unwrap_or(Cell::Empty),
            s.m1.into(),
            s.beta.into(),
            s.beta_ge_m1_over_4.into(),
            s.lambda_min.into(),
            Cell::opt(threshold),
        ]);
    }
    Ok(t)
}

pub fn rates(loaded: &Loaded<RatesConfig>, policy: &ConstantsPolicy) -> Result<Table, CliError> {
    let cfg = &loaded.config;
    let law = law_of(&cfg.law)?;
    let family = match cfg.family {
        FamilySpec::Ones => Family::Ones,
        FamilySpec::Arith => Family::Arith,
    };
    let r = rate_experiment(&law, family, &cfg.ns, cfg.lambda)?;
    let columns = ["family", "n", "lambda", "q", "slope", "intercept", "slope_stderr", "ci_low", "ci_high"];
    let mut t = Table::new("rates", &columns, &loaded.hash, &policy.id);
    let name = match cfg.family {
        FamilySpec::Ones => "ones",
        FamilySpec::Arith => "arith",
    };
    for p in &r.points {
        t.push(vec![
            name.into(),
            p.n.into(),
            r.lambda.into(),
            p.q.into(),
            r.fit.slope.into(),
            r.fit.intercept.into(),
            r.fit.stderr.into(),
            r.fit.ci_low.into(),
            r.fit.ci_high.into(),
        ]);
    }
    Ok(t)
}

pub struct VerifyOutcome {
    pub table: Table,
    pub reports: Vec<SuiteReport>,
}

pub fn verify(suite: &str, policy: &ConstantsPolicy) -> Result<VerifyOutcome, CliError> {
    let reports = run_suite(suite, policy).map_err(|e| CliError::Config(e.to_string()))?;
    let hash = hash_value(&serde_json::json!({ "schema": 1, "suite": suite }));
    let mut table = Table::new("verify", &["suite", "check", "passed", "detail"], &hash, &policy.id);
    for r in &reports {
        for c in &r.checks {
            table.push(vec![c.suite.as_str().into(), c.name.as_str().into(), c.passed.into(), c.detail.as_str().into()]);
        }
    }
    Ok(VerifyOutcome { table, reports })
}

/// The calibrated policy as JSON, in the format of `data/default_policy.json`.
pub fn calibrate_policy() -> Result<String, CliError> {
    let record = calibrate()?;
    let mut s = record.policy.to_json();
    s.push('\n');
    Ok(s)
}
