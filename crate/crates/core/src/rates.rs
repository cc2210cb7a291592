//! Decay rates of `Q` in `n`: log-log least squares with a t-interval.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::coeffs::CoefficientMatrix;
use crate::concentration::exact_q;
use crate::error::{domain, Result};
use crate::law::ScalarLaw;

pub const MIN_RATE_POINTS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    /// 95% confidence interval for the slope.
    pub ci_low: f64,
    pub ci_high: f64,
    pub points: usize,
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<SlopeFit> {
    if xs.len() != ys.len() {
        return domain("x and y grids differ in length");
    }
    if xs.len() < MIN_RATE_POINTS {
        return domain(format!("need at least {MIN_RATE_POINTS} points, got {}", xs.len()));
    }
    if let Some(v) = xs.iter().chain(ys).find(|v| !(**v > 0.0) || !v.is_finite()) {
        return domain(format!("log-log fit needs finite positive values, got {v}"));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return domain("x grid has no spread");
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let df = k - 2.0;
    let stderr = (rss / df / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, df).expect("df >= 2").inverse_cdf(0.975);
    Ok(SlopeFit {
        slope,
        intercept,
        stderr,
        ci_low: slope - t * stderr,
        ci_high: slope + t * stderr,
        points: xs.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// `a_k = 1`.
    Ones,
    /// `a_k = k`.
    Arith,
}

impl Family {
    pub fn build(&self, n: usize) -> Result<CoefficientMatrix> {
        match self {
            Family::Ones => CoefficientMatrix::ones(n),
            Family::Arith => CoefficientMatrix::arith(n),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub n: usize,
    pub q: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub family: Family,
    pub lambda: f64,
    pub points: Vec<RatePoint>,
    pub fit: SlopeFit,
}

/// Exact `Q(F_a, lambda)` along an `n` grid and its log-log slope.
pub fn rate_experiment(law: &ScalarLaw, family: Family, ns: &[usize], lambda: f64) -> Result<RateReport> {
    if ns.len() < MIN_RATE_POINTS {
        return domain(format!("rate grid needs at least {MIN_RATE_POINTS} values of n, got {}", ns.len()));
    }
    let points: Vec<RatePoint> = ns
        .iter()
        .map(|&n| Ok(RatePoint { n, q: exact_q(law, &family.build(n)?, lambda)?.value }))
        .collect::<Result<_>>()?;
    let xs: Vec<f64> = points.iter().map(|p| p.n as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.q).collect();
    Ok(RateReport { family, lambda, fit: loglog_slope(&xs, &ys)?, points })
}

/// `{2^lo, ..., 2^hi}`.
pub fn dyadic_grid(lo: u32, hi: u32) -> Vec<usize> {
    (lo..=hi).map(|k| 1usize << k).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exact_power_law() {
        let xs = [1.0, 2.0, 4.0, 8.0, 16.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-1.5)).collect();
        let fit = loglog_slope(&xs, &ys).unwrap();
        assert_abs_diff_eq!(fit.slope, -1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.intercept, 3f64.ln(), epsilon = 1e-12);
        assert!(fit.stderr < 1e-10);
    }

    #[test]
    fn interval_covers_noisy_slope() {
        let xs: Vec<f64> = (1..=10).map(|k| k as f64).collect();
        let ys: Vec<f64> =
            xs.iter().enumerate().map(|(i, x)| x.powf(-0.5) * (1.0 + 0.05 * if i % 2 == 0 { 1.0 } else { -1.0 })).collect();
        let fit = loglog_slope(&xs, &ys).unwrap();
        assert!(fit.ci_low < -0.5 && -0.5 < fit.ci_high);
    }

    #[test]
    fn small_grid_rejected() {
        assert!(loglog_slope(&[1.0, 2.0, 3.0], &[1.0, 1.0, 1.0]).is_err());
        assert!(rate_experiment(&ScalarLaw::Rademacher, Family::Ones, &[4, 8, 16], 0.5).is_err());
        assert!(loglog_slope(&[1.0, 2.0, 3.0, 4.0], &[1.0, 0.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn point_mass_is_flat() {
        let r = rate_experiment(&ScalarLaw::point_mass(1.0), Family::Ones, &[4, 8, 16, 32], 0.5).unwrap();
        assert!(r.fit.slope.abs() < 1e-12);
    }

    #[test]
    fn classical_rates() {
        let r = rate_experiment(&ScalarLaw::Rademacher, Family::Ones, &dyadic_grid(4, 14), 0.5).unwrap();
        assert!((r.fit.slope + 0.5).abs() <= 0.15, "ones slope {}", r.fit.slope);
        let ns: Vec<usize> = vec![16, 32, 64, 128, 256];
        let r = rate_experiment(&ScalarLaw::Rademacher, Family::Arith, &ns, 0.5).unwrap();
        assert!((r.fit.slope + 1.5).abs() <= 0.25, "arith slope {}", r.fit.slope);
    }
}
