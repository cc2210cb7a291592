//! Right-hand sides of the anti-concentration bounds under an explicit
//! constants policy, and empirical comparison reports.
//!
//! Every report names its policy. A violation under a policy says something
//! about the policy's constants, not about the inequality itself.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::arith::{condition_margin, condition_margin_gamma, MarginOptions};
use crate::coeffs::{gram, norm, CoefficientMatrix};
use crate::concentration::{draw_samples, exact_distribution, ConcentrationEstimate, ExactDistribution, McSample};
use crate::error::{domain, Error, Result};
use crate::law::{symmetrize, ScalarLaw, SymmetrizedLaw};

const DEFAULT_POLICY_JSON: &str = include_str!("../data/default_policy.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    DefaultCalibrated,
    User,
}

/// Every unnamed constant the bounds need.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsPolicy {
    pub id: String,
    /// `1 - cos x >= c_cos x^2` on `|x| <= pi`.
    pub c_cos: f64,
    /// Exponent constant in `exp(-c alpha^2 M)`.
    pub c_exp: f64,
    /// Absolute constant of the Kolmogorov-Rogozin and Siegel bounds.
    pub c_abs: f64,
    /// `esseen_up[d - 1]`: upper Esseen constant in dimension `d`.
    pub esseen_up: Vec<f64>,
    pub esseen_low: Vec<f64>,
    /// Envelope `C_d = envelope_base^d`.
    pub envelope_base: f64,
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
}

impl ConstantsPolicy {
    pub fn default_calibrated() -> &'static ConstantsPolicy {
        static POLICY: OnceLock<ConstantsPolicy> = OnceLock::new();
        POLICY.get_or_init(|| {
            ConstantsPolicy::from_json(DEFAULT_POLICY_JSON).expect("bundled default policy is valid")
        })
    }

    pub fn from_json(text: &str) -> Result<ConstantsPolicy> {
        let p: ConstantsPolicy =
            serde_json::from_str(text).map_err(|e| Error::Policy(format!("invalid policy file: {e}")))?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("policy serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Policy(format!("{name} must be finite and > 0, got {v}")))
            }
        };
        positive("c_cos", self.c_cos)?;
        positive("c_exp", self.c_exp)?;
        positive("c_abs", self.c_abs)?;
        positive("envelope_base", self.envelope_base)?;
        if self.esseen_up.is_empty() || self.esseen_up.len() != self.esseen_low.len() {
            return Err(Error::Policy("esseen_up and esseen_low must be nonempty and equally long".into()));
        }
        for (d, (&u, &l)) in self.esseen_up.iter().zip(&self.esseen_low).enumerate() {
            positive(&format!("esseen_up[d={}]", d + 1), u)?;
            positive(&format!("esseen_low[d={}]", d + 1), l)?;
        }
        if self.id.is_empty() {
            return Err(Error::Policy("policy id must be nonempty".into()));
        }
        Ok(())
    }

    pub fn max_dimension(&self) -> usize {
        self.esseen_up.len()
    }

    pub fn esseen_up(&self, d: usize) -> f64 {
        self.esseen_up[d - 1]
    }

    pub fn esseen_low(&self, d: usize) -> f64 {
        self.esseen_low[d - 1]
    }

    /// `C_d`.
    pub fn envelope(&self, d: usize) -> f64 {
        self.envelope_base.powi(d as i32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundName {
    Thm1,
    Cor1,
    Cor2,
    /// The `tau -> 0` form of `cor2`, with `P(X~ != 0)` in place of `M(tau)`.
    Cor2Limit,
    Thm2,
    Cor3,
    Cor4,
    Kr,
    Siegel,
    Fs,
    Rv,
}

impl BoundName {
    pub const ALL: [BoundName; 11] = [
        BoundName::Thm1,
        BoundName::Cor1,
        BoundName::Cor2,
        BoundName::Cor2Limit,
        BoundName::Thm2,
        BoundName::Cor3,
        BoundName::Cor4,
        BoundName::Kr,
        BoundName::Siegel,
        BoundName::Fs,
        BoundName::Rv,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            BoundName::Thm1 => "thm1",
            BoundName::Cor1 => "cor1",
            BoundName::Cor2 => "cor2",
            BoundName::Cor2Limit => "cor2-limit",
            BoundName::Thm2 => "thm2",
            BoundName::Cor3 => "cor3",
            BoundName::Cor4 => "cor4",
            BoundName::Kr => "kr",
            BoundName::Siegel => "siegel",
            BoundName::Fs => "fs",
            BoundName::Rv => "rv",
        }
    }
}

impl std::str::FromStr for BoundName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        BoundName::ALL
            .into_iter()
            .find(|b| b.as_str() == s)
            .ok_or_else(|| Error::Domain(format!("unknown bound name {s:?}")))
    }
}

/// Inputs of a bound evaluation; fields that do not apply are `None`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BoundInputs {
    /// `M(1)`, `M(tau)`, `P(X~ != 0)` or `p`, depending on the bound.
    pub m: Option<f64>,
    pub det_n: Option<f64>,
    pub d: Option<usize>,
    pub alpha: Option<f64>,
    pub gamma: Option<f64>,
    #[serde(rename = "D")]
    pub radius_d: Option<f64>,
    pub tau: Option<f64>,
    pub n: Option<usize>,
    pub p: Option<f64>,
    pub lambda: Option<f64>,
    /// `(lambda_k, Q(F~_k, lambda_k))` or `(lambda_k, M_k(lambda_k))`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terms: Option<Vec<(f64, f64)>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub bound_name: BoundName,
    pub inputs: BoundInputs,
    /// Radius at which the bound controls `Q(F_a, .)`.
    pub q_radius: f64,
    pub rhs_raw: f64,
    pub rhs_clipped: f64,
    pub vacuous: bool,
    pub components: Vec<Component>,
    pub empirical_q: Option<ConcentrationEstimate>,
    pub holds: Option<bool>,
    pub policy_id: String,
}

impl BoundReport {
    fn new(
        bound_name: BoundName,
        inputs: BoundInputs,
        q_radius: f64,
        components: Vec<Component>,
        policy: &ConstantsPolicy,
    ) -> BoundReport {
        let rhs_raw: f64 = components.iter().map(|c| c.value).sum();
        BoundReport {
            bound_name,
            inputs,
            q_radius,
            rhs_raw,
            rhs_clipped: rhs_raw.min(1.0),
            vacuous: !(rhs_raw < 1.0),
            components,
            empirical_q: None,
            holds: None,
            policy_id: policy.id.clone(),
        }
    }

    fn vacuous(bound_name: BoundName, inputs: BoundInputs, q_radius: f64, policy: &ConstantsPolicy) -> BoundReport {
        BoundReport::new(
            bound_name,
            inputs,
            q_radius,
            vec![Component { name: "vacuous".into(), value: f64::INFINITY }],
            policy,
        )
    }

    pub fn component(&self, name: &str) -> Option<f64> {
        self.components.iter().find(|c| c.name == name).map(|c| c.value)
    }

    /// Attaches an empirical estimate; holds iff `Q <= rhs_clipped + 3 stderr`,
    /// using the certified upper value when one exists.
    pub fn with_empirical(mut self, q: ConcentrationEstimate) -> BoundReport {
        self.holds = Some(q.conservative() <= self.rhs_clipped + 3.0 * q.stderr);
        self.empirical_q = Some(q);
        self
    }
}

fn check_common(m: f64, det_n: f64, d: usize, alpha: f64) -> Result<()> {
    if d == 0 {
        return domain("d must be >= 1");
    }
    if !(det_n > 0.0) {
        return Err(Error::DegenerateCoefficients(format!("det N must be > 0, got {det_n}")));
    }
    if m == 0.0 {
        return Err(Error::DegenerateLaw("M = 0: the law of X is degenerate".into()));
    }
    if !(m > 0.0 && m <= 1.0) {
        return domain(format!("M must lie in (0, 1], got {m}"));
    }
    if !(alpha >= 0.0) {
        return domain(format!("alpha must be >= 0, got {alpha}"));
    }
    Ok(())
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        domain(format!("{name} must be finite and > 0, got {v}"))
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma < 1.0 {
        Ok(())
    } else {
        domain(format!("gamma must lie in (0, 1), got {gamma}"))
    }
}

/// `C_d (rel / (g sqrt(m)))^d / sqrt(det N) + exp(-c_exp alpha^2 m)` with `g = 1/inv_gamma`.
#[allow(clippy::too_many_arguments)]
fn lattice_bound(
    name: BoundName,
    inputs: BoundInputs,
    q_radius: f64,
    m: f64,
    det_n: f64,
    d: usize,
    alpha: f64,
    rel: f64,
    inv_gamma: f64,
    policy: &ConstantsPolicy,
) -> BoundReport {
    let di = d as i32;
    let prefactor = policy.envelope(d) * rel.powi(di) * inv_gamma.powi(di) * (1.0 / m.sqrt()).powi(di) / det_n.sqrt();
    let exp_term = (-policy.c_exp * alpha * alpha * m).exp();
    BoundReport::new(
        name,
        inputs,
        q_radius,
        vec![
            Component { name: "prefactor".into(), value: prefactor },
            Component { name: "exp".into(), value: exp_term },
        ],
        policy,
    )
}

pub fn thm1_bound(m1: f64, det_n: f64, d: usize, alpha: f64, policy: &ConstantsPolicy) -> Result<BoundReport> {
    check_common(m1, det_n, d, alpha)?;
    let inputs = BoundInputs { m: Some(m1), det_n: Some(det_n), d: Some(d), alpha: Some(alpha), ..Default::default() };
    Ok(lattice_bound(BoundName::Thm1, inputs, (d as f64).sqrt(), m1, det_n, d, alpha, 1.0, 1.0, policy))
}

pub fn cor1_bound(m1: f64, det_n: f64, d: usize, alpha: f64, radius_d: f64, policy: &ConstantsPolicy) -> Result<BoundReport> {
    check_common(m1, det_n, d, alpha)?;
    check_positive("D", radius_d)?;
    let df = d as f64;
    let inputs = BoundInputs {
        m: Some(m1),
        det_n: Some(det_n),
        d: Some(d),
        alpha: Some(alpha),
        radius_d: Some(radius_d),
        ..Default::default()
    };
    let rel = df.sqrt() / radius_d;
    Ok(lattice_bound(BoundName::Cor1, inputs, df.sqrt() * rel, m1, det_n, d, alpha, rel, 1.0, policy))
}

/// The bound for `Q(F_a, d tau / D)` with `M(tau)` in place of `M(1)`.
pub fn cor2_bound(
    sym: &SymmetrizedLaw,
    det_n: f64,
    d: usize,
    alpha: f64,
    radius_d: f64,
    tau: f64,
    policy: &ConstantsPolicy,
) -> Result<BoundReport> {
    let m = sym.m_of_tau(tau)?;
    check_common(m, det_n, d, alpha)?;
    check_positive("D", radius_d)?;
    let df = d as f64;
    let inputs = BoundInputs {
        m: Some(m),
        det_n: Some(det_n),
        d: Some(d),
        alpha: Some(alpha),
        radius_d: Some(radius_d),
        tau: Some(tau),
        ..Default::default()
    };
    let rel = df.sqrt() / radius_d;
    Ok(lattice_bound(BoundName::Cor2, inputs, df.sqrt() * rel * tau, m, det_n, d, alpha, rel, 1.0, policy))
}

/// `Q(F_a, 0)` bound with `P(X~ != 0)` in place of `M(tau)`.
pub fn cor2_limit_bound(
    sym: &SymmetrizedLaw,
    det_n: f64,
    d: usize,
    alpha: f64,
    radius_d: f64,
    policy: &ConstantsPolicy,
) -> Result<BoundReport> {
    let m = sym.nonzero_prob();
    check_common(m, det_n, d, alpha)?;
    check_positive("D", radius_d)?;
    let df = d as f64;
    let inputs = BoundInputs {
        m: Some(m),
        det_n: Some(det_n),
        d: Some(d),
        alpha: Some(alpha),
        radius_d: Some(radius_d),
        tau: Some(0.0),
        ..Default::default()
    };
    let rel = df.sqrt() / radius_d;
    Ok(lattice_bound(BoundName::Cor2Limit, inputs, 0.0, m, det_n, d, alpha, rel, 1.0, policy))
}

pub fn thm2_bound(m1: f64, det_n: f64, d: usize, alpha: f64, gamma: f64, policy: &ConstantsPolicy) -> Result<BoundReport> {
    check_common(m1, det_n, d, alpha)?;
    check_gamma(gamma)?;
    let inputs = BoundInputs {
        m: Some(m1),
        det_n: Some(det_n),
        d: Some(d),
        alpha: Some(alpha),
        gamma: Some(gamma),
        ..Default::default()
    };
    Ok(lattice_bound(BoundName::Thm2, inputs, (d as f64).sqrt(), m1, det_n, d, alpha, 1.0, 1.0 / gamma, policy))
}

#[allow(clippy::too_many_arguments)]
pub fn cor3_bound(
    m1: f64,
    det_n: f64,
    d: usize,
    alpha: f64,
    gamma: f64,
    radius_d: f64,
    policy: &ConstantsPolicy,
) -> Result<BoundReport> {
    check_common(m1, det_n, d, alpha)?;
    check_gamma(gamma)?;
    check_positive("D", radius_d)?;
    let df = d as f64;
    let inputs = BoundInputs {
        m: Some(m1),
        det_n: Some(det_n),
        d: Some(d),
        alpha: Some(alpha),
        gamma: Some(gamma),
        radius_d: Some(radius_d),
        ..Default::default()
    };
    let rel = df.sqrt() / radius_d;
    Ok(lattice_bound(BoundName::Cor3, inputs, df.sqrt() * rel, m1, det_n, d, alpha, rel, 1.0 / gamma, policy))
}

#[allow(clippy::too_many_arguments)]
pub fn cor4_bound(
    sym: &SymmetrizedLaw,
    det_n: f64,
    d: usize,
    alpha: f64,
    gamma: f64,
    radius_d: f64,
    tau: f64,
    policy: &ConstantsPolicy,
) -> Result<BoundReport> {
    let m = sym.m_of_tau(tau)?;
    check_common(m, det_n, d, alpha)?;
    check_gamma(gamma)?;
    check_positive("D", radius_d)?;
    let df = d as f64;
    let inputs = BoundInputs {
        m: Some(m),
        det_n: Some(det_n),
        d: Some(d),
        alpha: Some(alpha),
        gamma: Some(gamma),
        radius_d: Some(radius_d),
        tau: Some(tau),
        ..Default::default()
    };
    let rel = df.sqrt() / radius_d;
    Ok(lattice_bound(BoundName::Cor4, inputs, df.sqrt() * rel * tau, m, det_n, d, alpha, rel, 1.0 / gamma, policy))
}

fn check_radii(lambdas: &[f64], lambda: f64, values: &[f64], what: &str) -> Result<()> {
    check_positive("lambda", lambda)?;
    if lambdas.is_empty() || lambdas.len() != values.len() {
        return domain(format!("need as many {what} as radii, and at least one"));
    }
    for (k, &l) in lambdas.iter().enumerate() {
        if !(l > 0.0 && l <= lambda) {
            return domain(format!("lambda_{k} = {l} must lie in (0, lambda = {lambda}]"));
        }
    }
    Ok(())
}

fn weighted_bound(
    name: BoundName,
    lambdas: &[f64],
    weights: &[f64],
    lambda: f64,
    terms: Vec<(f64, f64)>,
    policy: &ConstantsPolicy,
) -> BoundReport {
    let sum: f64 = lambdas.iter().zip(weights).map(|(l, w)| l * l * w).sum();
    let inputs = BoundInputs { n: Some(lambdas.len()), lambda: Some(lambda), terms: Some(terms), ..Default::default() };
    if !(sum > 0.0) {
        return BoundReport::vacuous(name, inputs, lambda, policy);
    }
    let value = policy.c_abs * lambda / sum.sqrt();
    BoundReport::new(name, inputs, lambda, vec![Component { name: "main".into(), value }], policy)
}

/// `C lambda (sum lambda_k^2 (1 - Q(F~_k, lambda_k)))^{-1/2}`.
pub fn kr_bound(lambdas: &[f64], q_tildes: &[f64], lambda: f64, policy: &ConstantsPolicy) -> Result<BoundReport> {
    check_radii(lambdas, lambda, q_tildes, "Q values")?;
    if let Some(q) = q_tildes.iter().find(|q| !(0.0..=1.0).contains(*q)) {
        return domain(format!("Q values must lie in [0, 1], got {q}"));
    }
    let weights: Vec<f64> = q_tildes.iter().map(|q| 1.0 - q).collect();
    let terms = lambdas.iter().copied().zip(q_tildes.iter().copied()).collect();
    Ok(weighted_bound(BoundName::Kr, lambdas, &weights, lambda, terms, policy))
}

/// `C lambda (sum lambda_k^2 M_k(lambda_k))^{-1/2}`.
pub fn siegel_bound(lambdas: &[f64], m_values: &[f64], lambda: f64, policy: &ConstantsPolicy) -> Result<BoundReport> {
    check_radii(lambdas, lambda, m_values, "M values")?;
    if let Some(m) = m_values.iter().find(|m| !(0.0..=1.0).contains(*m)) {
        return domain(format!("M values must lie in [0, 1], got {m}"));
    }
    let terms = lambdas.iter().copied().zip(m_values.iter().copied()).collect();
    Ok(weighted_bound(BoundName::Siegel, lambdas, m_values, lambda, terms, policy))
}

fn check_p(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        domain(format!("p must lie in [0, 1], got {p}"))
    }
}

/// `C_d (sqrt(d) / (sqrt(p) D))^d det(N)^{-1/2} + exp(-c p alpha^2)`.
pub fn fs_bound(p: f64, det_n: f64, d: usize, alpha: f64, radius_d: f64, policy: &ConstantsPolicy) -> Result<BoundReport> {
    check_p(p)?;
    check_positive("D", radius_d)?;
    let df = d as f64;
    let inputs = BoundInputs {
        p: Some(p),
        det_n: Some(det_n),
        d: Some(d),
        alpha: Some(alpha),
        radius_d: Some(radius_d),
        ..Default::default()
    };
    if p == 0.0 {
        return Ok(BoundReport::vacuous(BoundName::Fs, inputs, df.sqrt() * (df.sqrt() / radius_d), policy));
    }
    check_common(p, det_n, d, alpha)?;
    let rel = df.sqrt() / radius_d;
    Ok(lattice_bound(BoundName::Fs, inputs, df.sqrt() * rel, p, det_n, d, alpha, rel, 1.0, policy))
}

/// `C_d (sqrt(d) / (gamma D sqrt(p)))^d + exp(-2 p alpha^2)`.
pub fn rv_bound(p: f64, d: usize, alpha: f64, gamma: f64, radius_d: f64, policy: &ConstantsPolicy) -> Result<BoundReport> {
    check_p(p)?;
    check_gamma(gamma)?;
    check_positive("D", radius_d)?;
    if d == 0 {
        return domain("d must be >= 1");
    }
    let df = d as f64;
    let inputs = BoundInputs {
        p: Some(p),
        d: Some(d),
        alpha: Some(alpha),
        gamma: Some(gamma),
        radius_d: Some(radius_d),
        ..Default::default()
    };
    if p == 0.0 {
        return Ok(BoundReport::vacuous(BoundName::Rv, inputs, df.sqrt() * (df.sqrt() / radius_d), policy));
    }
    if !(alpha >= 0.0) {
        return domain(format!("alpha must be >= 0, got {alpha}"));
    }
    let di = d as i32;
    let prefactor = policy.envelope(d) * (df.sqrt() / (gamma * radius_d * p.sqrt())).powi(di);
    let exp_term = (-2.0 * p * alpha * alpha).exp();
    Ok(BoundReport::new(
        BoundName::Rv,
        inputs,
        df.sqrt() * (df.sqrt() / radius_d),
        vec![
            Component { name: "prefactor".into(), value: prefactor },
            Component { name: "exp".into(), value: exp_term },
        ],
        policy,
    ))
}

/// Smallest `alpha` beyond which `thm1` drops below 1, or `None` if the
/// prefactor alone is already `>= 1`.
pub fn thm1_alpha_threshold(m1: f64, det_n: f64, d: usize, policy: &ConstantsPolicy) -> Result<Option<f64>> {
    let r = thm1_bound(m1, det_n, d, f64::INFINITY, policy)?;
    let pre = r.component("prefactor").expect("prefactor component");
    if pre >= 1.0 {
        return Ok(None);
    }
    Ok(Some((-(1.0 - pre).ln() / (policy.c_exp * m1)).sqrt()))
}

/// How the empirical side of a comparison is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmpiricalMode {
    /// Exact when the law is discrete and the support fits, otherwise Monte Carlo.
    #[default]
    Auto,
    Exact,
    MonteCarlo,
    None,
}

/// One comparison instance.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareInstance {
    pub law: ScalarLaw,
    pub a: CoefficientMatrix,
    pub bounds: Vec<BoundName>,
    /// Defaults to `sqrt(d)`.
    pub radius_d: Option<f64>,
    /// Defaults to `D / d`.
    pub tau: Option<f64>,
    /// Defaults to 0.5.
    pub gamma: Option<f64>,
    /// Overrides the certified margin.
    pub alpha: Option<f64>,
    /// Overrides `1 - Q(L(X), 1)`.
    pub p: Option<f64>,
    /// Radius for `kr` and `siegel`; defaults to `sqrt(d)`.
    pub lambda: Option<f64>,
    pub empirical: EmpiricalMode,
    pub samples: usize,
    pub seed: Option<u64>,
    pub margin: MarginOptions,
}

impl CompareInstance {
    pub fn new(law: ScalarLaw, a: CoefficientMatrix, bounds: Vec<BoundName>) -> CompareInstance {
        CompareInstance {
            law,
            a,
            bounds,
            radius_d: None,
            tau: None,
            gamma: None,
            alpha: None,
            p: None,
            lambda: None,
            empirical: EmpiricalMode::Auto,
            samples: 100_000,
            seed: None,
            margin: MarginOptions::default(),
        }
    }
}

/// Scalar diagnostics shared by every row of a comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSummary {
    pub n: usize,
    pub d: usize,
    pub m1: f64,
    pub beta: f64,
    pub beta_ge_m1_over_4: bool,
    pub det_n: f64,
    pub lambda_min: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub summary: InstanceSummary,
    pub reports: Vec<BoundReport>,
}

enum Empirical {
    Exact(ExactDistribution),
    Mc(McSample),
    Off,
}

struct Context<'a> {
    inst: &'a CompareInstance,
    sym: SymmetrizedLaw,
    det_n: f64,
    alpha_plain: Vec<(f64, f64)>,
    alpha_gamma: Vec<((f64, f64), f64)>,
    empirical: Option<Empirical>,
}

impl Context<'_> {
    fn alpha_plain(&mut self, radius: f64) -> Result<f64> {
        if let Some(a) = self.inst.alpha {
            return Ok(a);
        }
        if let Some(&(_, v)) = self.alpha_plain.iter().find(|(r, _)| *r == radius) {
            return Ok(v);
        }
        let v = condition_margin(&self.inst.a, radius, &self.inst.margin)?.certified_lower;
        self.alpha_plain.push((radius, v));
        Ok(v)
    }

    fn alpha_gamma(&mut self, radius: f64, gamma: f64) -> Result<f64> {
        if let Some(a) = self.inst.alpha {
            return Ok(a);
        }
        if let Some(&(_, v)) = self.alpha_gamma.iter().find(|(k, _)| *k == (radius, gamma)) {
            return Ok(v);
        }
        let v = condition_margin_gamma(&self.inst.a, radius, gamma, &self.inst.margin)?.certified_lower;
        self.alpha_gamma.push(((radius, gamma), v));
        Ok(v)
    }

    fn empirical(&mut self, radius: f64) -> Result<Option<ConcentrationEstimate>> {
        if self.empirical.is_none() {
            let inst = self.inst;
            let mc = |inst: &CompareInstance| -> Result<Empirical> {
                let seed = inst
                    .seed
                    .ok_or_else(|| Error::Domain("a seed is required for Monte Carlo comparison".into()))?;
                Ok(Empirical::Mc(draw_samples(&inst.law, &inst.a, inst.samples, seed)?))
            };
            self.empirical = Some(match inst.empirical {
                EmpiricalMode::None => Empirical::Off,
                EmpiricalMode::Exact => Empirical::Exact(exact_distribution(&inst.law, &inst.a)?),
                EmpiricalMode::MonteCarlo => mc(inst)?,
                EmpiricalMode::Auto if inst.law.is_discrete() => match exact_distribution(&inst.law, &inst.a) {
                    Ok(dist) => Empirical::Exact(dist),
                    Err(Error::Capacity(_)) => mc(inst)?,
                    Err(e) => return Err(e),
                },
                EmpiricalMode::Auto => mc(inst)?,
            });
        }
        match self.empirical.as_ref().expect("initialized above") {
            Empirical::Off => Ok(None),
            Empirical::Exact(dist) => dist.concentration(radius).map(Some),
            Empirical::Mc(_) if radius == 0.0 => Ok(None),
            Empirical::Mc(s) => s.concentration(radius).map(Some),
        }
    }
}

/// Evaluates every requested bound of an instance and attaches empirical `Q`.
pub fn compare(inst: &CompareInstance, policy: &ConstantsPolicy) -> Result<Comparison> {
    let a = &inst.a;
    let d = a.d();
    let df = d as f64;
    let g = gram(a);
    let sym = symmetrize(&inst.law)?;
    let m1 = sym.m_of_tau(1.0)?;
    let p = match inst.p {
        Some(p) => {
            check_p(p)?;
            p
        }
        None => (1.0 - inst.law.concentration(1.0)).max(0.0),
    };
    let summary = InstanceSummary {
        n: a.n(),
        d,
        m1,
        beta: sym.beta(),
        beta_ge_m1_over_4: sym.beta() >= m1 / 4.0,
        det_n: g.determinant,
        lambda_min: g.lambda_min(),
        p,
    };
    let radius_d = inst.radius_d.unwrap_or(df.sqrt());
    let tau = inst.tau.unwrap_or(radius_d / df);
    let gamma = inst.gamma.unwrap_or(0.5);
    let lambda = inst.lambda.unwrap_or(df.sqrt());
    let mut ctx = Context {
        inst,
        det_n: g.determinant,
        sym,
        alpha_plain: Vec::new(),
        alpha_gamma: Vec::new(),
        empirical: None,
    };
    let mut reports = Vec::new();
    for &name in &inst.bounds {
        let det_n = ctx.det_n;
        let report = match name {
            BoundName::Thm1 => {
                let alpha = ctx.alpha_plain(df.sqrt())?;
                thm1_bound(m1, det_n, d, alpha, policy)?
            }
            BoundName::Cor1 => {
                let alpha = ctx.alpha_plain(radius_d)?;
                cor1_bound(m1, det_n, d, alpha, radius_d, policy)?
            }
            BoundName::Cor2 => {
                let alpha = ctx.alpha_plain(radius_d)?;
                cor2_bound(&ctx.sym, det_n, d, alpha, radius_d, tau, policy)?
            }
            BoundName::Cor2Limit => {
                let alpha = ctx.alpha_plain(radius_d)?;
                cor2_limit_bound(&ctx.sym, det_n, d, alpha, radius_d, policy)?
            }
            BoundName::Thm2 => {
                let alpha = ctx.alpha_gamma(df.sqrt(), gamma)?;
                thm2_bound(m1, det_n, d, alpha, gamma, policy)?
            }
            BoundName::Cor3 => {
                let alpha = ctx.alpha_gamma(radius_d, gamma)?;
                cor3_bound(m1, det_n, d, alpha, gamma, radius_d, policy)?
            }
            BoundName::Cor4 => {
                let alpha = ctx.alpha_gamma(radius_d, gamma)?;
                cor4_bound(&ctx.sym, det_n, d, alpha, gamma, radius_d, tau, policy)?
            }
            BoundName::Fs => {
                let alpha = ctx.alpha_plain(radius_d)?;
                fs_bound(p, det_n, d, alpha, radius_d, policy)?
            }
            BoundName::Rv => {
                let alpha = ctx.alpha_gamma(radius_d, gamma)?;
                rv_bound(p, d, alpha, gamma, radius_d, policy)?
            }
            BoundName::Kr | BoundName::Siegel => {
                // Y_k = X_k a_k: Q(F~_k, l) = Q(G, l / |a_k|) and M_k(l) = M(l / |a_k|).
                let lambdas = vec![lambda; a.n()];
                let mut values = Vec::with_capacity(a.n());
                for row in a.rows() {
                    let r = norm(row);
                    values.push(match (name, r > 0.0) {
                        (BoundName::Kr, true) => ctx.sym.concentration(lambda / r),
                        (BoundName::Kr, false) => 1.0,
                        (_, true) => ctx.sym.m_of_tau(lambda / r)?,
                        (_, false) => 0.0,
                    });
                }
                if name == BoundName::Kr {
                    kr_bound(&lambdas, &values, lambda, policy)?
                } else {
                    siegel_bound(&lambdas, &values, lambda, policy)?
                }
            }
        };
        let report = match ctx.empirical(report.q_radius)? {
            Some(q) => report.with_empirical(q),
            None => report,
        };
        reports.push(report);
    }
    Ok(Comparison { summary, reports })
}

/// Formats a number with 17 significant digits; `inf`, `-inf`, `nan` spelled out.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

pub const CSV_HEADER: &str = "bound_name,m,det_n,d,alpha,gamma,D,tau,n,p,lambda,q_radius,rhs_raw,rhs_clipped,vacuous,empirical_q,stderr,method,holds,policy_id";

impl BoundReport {
    pub fn csv_row(&self) -> String {
        let i = &self.inputs;
        let q = self.empirical_q.as_ref();
        [
            self.bound_name.as_str().to_string(),
            fmt_opt(i.m),
            fmt_opt(i.det_n),
            i.d.map(|d| d.to_string()).unwrap_or_default(),
            fmt_opt(i.alpha),
            fmt_opt(i.gamma),
            fmt_opt(i.radius_d),
            fmt_opt(i.tau),
            i.n.map(|n| n.to_string()).unwrap_or_default(),
            fmt_opt(i.p),
            fmt_opt(i.lambda),
            fmt_num(self.q_radius),
            fmt_num(self.rhs_raw),
            fmt_num(self.rhs_clipped),
            self.vacuous.to_string(),
            fmt_opt(q.map(|q| q.conservative())),
            fmt_opt(q.map(|q| q.stderr)),
            q.map(|q| q.method.as_str().to_string()).unwrap_or_default(),
            self.holds.map(|h| h.to_string()).unwrap_or_default(),
            self.policy_id.clone(),
        ]
        .join(",")
    }
}
