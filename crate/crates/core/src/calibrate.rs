//! One-shot calibration of the default constants policy on exact-oracle instances.
//!
//! The bundled `data/default_policy.json` is the frozen output of [`calibrate`];
//! a test checks that rerunning reproduces it.

use serde::{Deserialize, Serialize};

use crate::bounds::{ConstantsPolicy, Provenance};
use crate::charfn::{ball_integral, cf_product, BallIntegral, IntegrationOptions};
use crate::coeffs::{gram, norm, CoefficientMatrix};
use crate::concentration::exact_distribution;
use crate::error::Result;
use crate::law::{symmetrize, ScalarLaw, SymmetrizedLaw};

pub const CALIBRATED_DIMENSIONS: usize = 3;
pub const POLICY_DIMENSIONS: usize = 8;
/// Safety factor applied to every calibrated ratio.
pub const ESSEEN_MARGIN: f64 = 1.5;
pub const ENVELOPE_MARGIN: f64 = 1.25;
pub const DEFAULT_POLICY_ID: &str = "default-calibrated-v1";

#[derive(Debug, Clone, PartialEq)]
pub struct OracleInstance {
    pub name: String,
    pub a: CoefficientMatrix,
}

fn inst(name: impl Into<String>, a: CoefficientMatrix) -> OracleInstance {
    OracleInstance { name: name.into(), a }
}

/// Instances for the Esseen constants, used with the symmetrized Rademacher law.
pub fn esseen_calibration_suite() -> Vec<OracleInstance> {
    let mut out = vec![
        inst("ones(4)", CoefficientMatrix::ones(4).unwrap()),
        inst("ones(9)", CoefficientMatrix::ones(9).unwrap()),
        inst("arith(6)", CoefficientMatrix::arith(6).unwrap()),
        inst("scalar(0.5,1.25,2)", CoefficientMatrix::scalar(&[0.5, 1.25, 2.0]).unwrap()),
    ];
    for seed in 0..3 {
        out.push(inst(format!("sphere(6,2,{seed})"), CoefficientMatrix::random_sphere(6, 2, seed, 1.0).unwrap()));
    }
    for seed in 0..2 {
        out.push(inst(format!("sphere(5,3,{seed})"), CoefficientMatrix::random_sphere(5, 3, seed, 1.0).unwrap()));
    }
    out
}

/// Further instances never used for calibration.
pub fn esseen_holdout_suite() -> Vec<OracleInstance> {
    let mut out = vec![
        inst("ones(6)", CoefficientMatrix::ones(6).unwrap()),
        inst("arith(5)", CoefficientMatrix::arith(5).unwrap()),
        inst("scalar(0.75,1,1.5,3)", CoefficientMatrix::scalar(&[0.75, 1.0, 1.5, 3.0]).unwrap()),
    ];
    for seed in 10..13 {
        out.push(inst(format!("sphere(7,2,{seed})"), CoefficientMatrix::random_sphere(7, 2, seed, 1.2).unwrap()));
    }
    for seed in 10..12 {
        out.push(inst(format!("sphere(6,3,{seed})"), CoefficientMatrix::random_sphere(6, 3, seed, 1.0).unwrap()));
    }
    out
}

/// Instances for the `C_d` envelope and the absolute constant, used with Rademacher `X`.
pub fn envelope_calibration_suite() -> Vec<OracleInstance> {
    let mut out = Vec::new();
    for n in [4, 16, 64, 256] {
        out.push(inst(format!("ones({n})"), CoefficientMatrix::ones(n).unwrap()));
    }
    for n in [8, 32] {
        out.push(inst(format!("arith({n})"), CoefficientMatrix::arith(n).unwrap()));
    }
    for seed in 0..3 {
        out.push(inst(format!("sphere(10,2,{seed})"), CoefficientMatrix::random_sphere(10, 2, seed, 1.0).unwrap()));
    }
    for seed in 0..2 {
        out.push(inst(format!("sphere(8,3,{seed})"), CoefficientMatrix::random_sphere(8, 3, seed, 1.0).unwrap()));
    }
    out
}

/// Exact `Q(F, sqrt(d))` against `int_{B(sqrt d)} F^` for one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EsseenPoint {
    pub name: String,
    pub d: usize,
    pub q_lower: f64,
    pub q_upper: f64,
    pub integral: BallIntegral,
}

pub fn symmetrized_rademacher() -> SymmetrizedLaw {
    symmetrize(&ScalarLaw::Rademacher).expect("rademacher symmetrizes")
}

pub fn esseen_point(sym: &SymmetrizedLaw, inst: &OracleInstance, opts: &IntegrationOptions) -> Result<EsseenPoint> {
    let a = &inst.a;
    let d = a.d();
    let radius = (d as f64).sqrt();
    let q = exact_distribution(sym.base(), a)?.concentration(radius)?;
    let integral = ball_integral(|t| cf_product(sym, a, t).re, d, radius, opts)?;
    Ok(EsseenPoint { name: inst.name.clone(), d, q_lower: q.value, q_upper: q.conservative(), integral })
}

/// `(C_up, C_low)` for dimensions `1..=CALIBRATED_DIMENSIONS`.
fn calibrate_esseen(points: &[EsseenPoint]) -> (Vec<f64>, Vec<f64>) {
    let mut up = Vec::new();
    let mut low = Vec::new();
    for d in 1..=CALIBRATED_DIMENSIONS {
        let (mut u, mut l) = (0.0_f64, f64::INFINITY);
        for p in points.iter().filter(|p| p.d == d) {
            let i = &p.integral;
            u = u.max(p.q_upper / (i.value - 3.0 * i.stderr));
            l = l.min(p.q_lower / (i.value + 3.0 * i.stderr));
        }
        up.push(ESSEEN_MARGIN * u);
        low.push(l / ESSEEN_MARGIN);
    }
    (up, low)
}

/// Geometric extrapolation beyond the calibrated dimensions, never shrinking
/// the upper constants nor growing the lower ones.
fn extrapolate(values: &mut Vec<f64>, grow: bool) {
    let k = values.len();
    let ratios = values.windows(2).map(|w| w[1] / w[0]);
    let r = if grow { ratios.fold(1.0, f64::max) } else { ratios.fold(1.0, f64::min) };
    while values.len() < POLICY_DIMENSIONS {
        let last = values[values.len() - 1];
        values.push(last * r);
    }
    debug_assert!(values.len() > k || k >= POLICY_DIMENSIONS);
}

/// Ratios driving the envelope and absolute constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopePoint {
    pub name: String,
    pub d: usize,
    pub q_upper: f64,
    /// `(Q M1^{d/2} sqrt(det N))^{1/d}`.
    pub envelope_ratio: f64,
    /// `max Q sqrt(S) / lambda` over the radii tried, for either weighted sum.
    pub abs_ratio: f64,
}

pub fn envelope_point(law: &ScalarLaw, inst: &OracleInstance) -> Result<EnvelopePoint> {
    let a = &inst.a;
    let d = a.d();
    let sym = symmetrize(law)?;
    let m1 = sym.m_of_tau(1.0)?;
    let det_n = gram(a).determinant;
    let dist = exact_distribution(law, a)?;
    let rd = (d as f64).sqrt();
    let q = dist.concentration(rd)?.conservative();
    let envelope_ratio = (q * m1.powf(d as f64 / 2.0) * det_n.sqrt()).powf(1.0 / d as f64);
    let radii: Vec<f64> = if d == 1 { vec![0.5, 1.0, 2.0] } else { vec![rd] };
    let mut abs_ratio = 0.0_f64;
    for lambda in radii {
        let q = dist.concentration(lambda)?.conservative();
        let (mut kr, mut siegel) = (0.0, 0.0);
        for row in a.rows() {
            let r = norm(row);
            if r > 0.0 {
                kr += lambda * lambda * (1.0 - sym.concentration(lambda / r));
                siegel += lambda * lambda * sym.m_of_tau(lambda / r)?;
            }
        }
        for s in [kr, siegel] {
            if s > 0.0 {
                abs_ratio = abs_ratio.max(q * f64::sqrt(s) / lambda);
            }
        }
    }
    Ok(EnvelopePoint { name: inst.name.clone(), d, q_upper: q, envelope_ratio, abs_ratio })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRecord {
    pub esseen: Vec<EsseenPoint>,
    pub envelope: Vec<EnvelopePoint>,
    pub policy: ConstantsPolicy,
}

/// Runs the calibration; deterministic for fixed integration options.
pub fn calibrate() -> Result<CalibrationRecord> {
    let opts = IntegrationOptions::default();
    let sym = symmetrized_rademacher();
    let esseen: Vec<EsseenPoint> =
        esseen_calibration_suite().iter().map(|i| esseen_point(&sym, i, &opts)).collect::<Result<_>>()?;
    let (mut up, mut low) = calibrate_esseen(&esseen);
    extrapolate(&mut up, true);
    extrapolate(&mut low, false);

    let envelope: Vec<EnvelopePoint> = envelope_calibration_suite()
        .iter()
        .map(|i| envelope_point(&ScalarLaw::Rademacher, i))
        .collect::<Result<_>>()?;
    let envelope_base = ENVELOPE_MARGIN * envelope.iter().map(|p| p.envelope_ratio).fold(0.0, f64::max);
    let c_abs = ENVELOPE_MARGIN * envelope.iter().map(|p| p.abs_ratio).fold(0.0, f64::max);

    let c_cos = 2.0 / std::f64::consts::PI.powi(2);
    let policy = ConstantsPolicy {
        id: DEFAULT_POLICY_ID.into(),
        c_cos,
        c_exp: c_cos / 4.0,
        c_abs,
        esseen_up: up,
        esseen_low: low,
        envelope_base,
        provenance: Provenance::DefaultCalibrated,
        notes: Some(format!(
            "Esseen constants calibrated for d <= {CALIBRATED_DIMENSIONS} on symmetrized Rademacher instances \
             (margin {ESSEEN_MARGIN}), geometrically extrapolated to d = {POLICY_DIMENSIONS}; envelope base and \
             absolute constant calibrated on Rademacher instances (margin {ENVELOPE_MARGIN})"
        )),
    };
    policy.validate()?;
    Ok(CalibrationRecord { esseen, envelope, policy })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recalibration_reproduces_frozen_policy() {
        let record = calibrate().unwrap();
        let frozen = ConstantsPolicy::default_calibrated();
        assert_eq!(&record.policy, frozen, "rerun `acl calibrate` and refresh data/default_policy.json");
    }

    #[test]
    fn extrapolation_is_conservative() {
        let mut up = vec![1.0, 1.5, 1.2];
        extrapolate(&mut up, true);
        assert_eq!(up.len(), POLICY_DIMENSIONS);
        assert!(up.windows(2).skip(2).all(|w| w[1] >= w[0]));
        let mut low = vec![0.5, 0.6, 0.3];
        extrapolate(&mut low, false);
        assert!(low.windows(2).skip(2).all(|w| w[1] <= w[0]));
    }
}
