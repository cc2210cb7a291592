//! Characteristic functions of `S_a` and of the auxiliary laws `H_{z,gamma}`,
//! integrated over Euclidean balls.
//!
//! Ball integrals map points of `[0,1)^{d+1}` to the ball (isotropic direction,
//! radius `R * U^{1/d}`). Two point sets are available:
//!
//! * `LowDiscrepancy`: a Halton set randomized by independent Cranley-Patterson
//!   shifts, one shift per chunk; the standard error comes from the spread of
//!   the per-shift estimates.
//! * `PseudoRandom`: ChaCha8 streams, one per chunk; the standard error comes
//!   from the sample variance.
//!
//! The chunk count is fixed, each chunk gets `seed::child_seed(seed, chunk)`,
//! and chunk results are reduced in index order, so a given seed always yields
//! the same bits no matter how many worker threads run.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::gamma::gamma;

use crate::bounds::ConstantsPolicy;
use crate::coeffs::{dot, CoefficientMatrix};
use crate::error::{domain, Error, Result};
use crate::law::{ScalarLaw, SymmetrizedLaw};
use crate::seed;

/// Anything with a one-dimensional characteristic function.
pub trait CharFn: Sync {
    fn charfn(&self, t: f64) -> Complex64;
}

impl CharFn for ScalarLaw {
    fn charfn(&self, t: f64) -> Complex64 {
        ScalarLaw::charfn(self, t)
    }
}

impl CharFn for SymmetrizedLaw {
    fn charfn(&self, t: f64) -> Complex64 {
        Complex64::new(SymmetrizedLaw::charfn(self, t), 0.0)
    }
}

/// `prod_k phi(<t, a_k>)`: the characteristic function of `S_a` at `t`.
pub fn cf_weighted_sum<L: CharFn + ?Sized>(law: &L, a: &CoefficientMatrix, t: &[f64]) -> Result<Complex64> {
    if t.len() != a.d() {
        return domain(format!("t has length {}, expected d = {}", t.len(), a.d()));
    }
    Ok(cf_product(law, a, t))
}

pub(crate) fn cf_product<L: CharFn + ?Sized>(law: &L, a: &CoefficientMatrix, t: &[f64]) -> Complex64 {
    let mut acc = Complex64::new(1.0, 0.0);
    for row in a.rows() {
        let s = dot(row, t);
        if s != 0.0 {
            acc *= law.charfn(s);
        }
    }
    acc
}

/// `1 - cos x` without cancellation near 0.
pub fn one_minus_cos(x: f64) -> f64 {
    let s = (0.5 * x).sin();
    2.0 * s * s
}

/// Distance from `x` to the nearest multiple of `2 pi`.
pub fn periodic_dist(x: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    (x - two_pi * (x / two_pi).round()).abs()
}

/// `exp(-(gamma/2) sum_k (1 - cos(2 z <t, a_k>)))`.
pub fn cf_h(z: f64, gamma: f64, a: &CoefficientMatrix, t: &[f64]) -> Result<f64> {
    if !(gamma > 0.0) {
        return domain(format!("gamma must be positive, got {gamma}"));
    }
    if t.len() != a.d() {
        return domain(format!("t has length {}, expected d = {}", t.len(), a.d()));
    }
    let sum: f64 = a.rows().map(|r| one_minus_cos(2.0 * z * dot(r, t))).sum();
    Ok((-0.5 * gamma * sum).exp())
}

pub fn ball_volume(d: usize, radius: f64) -> f64 {
    let half = 0.5 * d as f64;
    std::f64::consts::PI.powf(half) / gamma(half + 1.0) * radius.powi(d as i32)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntegrationMode {
    LowDiscrepancy,
    PseudoRandom,
}

impl IntegrationMode {
    pub fn default_for(d: usize) -> Self {
        if d <= 4 {
            IntegrationMode::LowDiscrepancy
        } else {
            IntegrationMode::PseudoRandom
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegrationOptions {
    pub points: usize,
    pub seed: u64,
    pub mode: Option<IntegrationMode>,
    pub chunks: usize,
}

pub const DEFAULT_POINTS: usize = 1 << 16;
pub const MIN_POINTS: usize = 1000;

impl Default for IntegrationOptions {
    fn default() -> Self {
        Self { points: DEFAULT_POINTS, seed: 0x5EED, mode: None, chunks: 16 }
    }
}

impl IntegrationOptions {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallIntegral {
    pub radius: f64,
    pub dimension: usize,
    pub value: f64,
    pub stderr: f64,
    pub point_count: usize,
    pub mode: IntegrationMode,
}

const PRIMES: [u32; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as u64;
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % b) as f64;
        i /= b;
        f *= inv;
    }
    r
}

/// Maps `u` in `[0,1)^{d+1}` to the ball of radius `radius` in `R^d`.
fn map_to_ball(u: &[f64], radius: f64, normal: &Normal, out: &mut [f64]) {
    let d = out.len();
    match d {
        1 => out[0] = radius * (2.0 * u[0] - 1.0),
        2 => {
            let r = radius * u[0].sqrt();
            let theta = std::f64::consts::TAU * u[1];
            out[0] = r * theta.cos();
            out[1] = r * theta.sin();
        }
        _ => {
            let mut norm2 = 0.0;
            for i in 0..d {
                let p = u[i].clamp(1e-15, 1.0 - 1e-15);
                out[i] = normal.inverse_cdf(p);
                norm2 += out[i] * out[i];
            }
            let r = radius * u[d].powf(1.0 / d as f64) / norm2.sqrt().max(1e-300);
            out.iter_mut().for_each(|x| *x *= r);
        }
    }
}

struct ChunkSums {
    sum: f64,
    sum_sq: f64,
    count: usize,
}

/// `Vol(B(radius)) * mean of f` over points uniform in the ball.
pub fn ball_integral<F>(f: F, dim: usize, radius: f64, opts: &IntegrationOptions) -> Result<BallIntegral>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if dim == 0 {
        return domain("dimension must be at least 1");
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return domain(format!("radius must be positive, got {radius}"));
    }
    if opts.points < MIN_POINTS {
        return domain(format!("need at least {MIN_POINTS} points, got {}", opts.points));
    }
    if dim + 1 > PRIMES.len() {
        return domain(format!("dimension {dim} too large for the Halton bases"));
    }
    let mode = opts.mode.unwrap_or_else(|| IntegrationMode::default_for(dim));
    let chunks = opts.chunks.max(2);
    let per_chunk = opts.points.div_ceil(chunks);
    let normal = Normal::standard();
    let volume = ball_volume(dim, radius);

    let results: Vec<Result<ChunkSums>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = seed::rng_for(opts.seed, c as u64);
            let shift: Vec<f64> = (0..=dim).map(|_| rng.random::<f64>()).collect();
            let mut u = vec![0.0; dim + 1];
            let mut t = vec![0.0; dim];
            let mut sums = ChunkSums { sum: 0.0, sum_sq: 0.0, count: 0 };
            for i in 0..per_chunk {
                match mode {
                    IntegrationMode::LowDiscrepancy => {
                        for (j, uj) in u.iter_mut().enumerate() {
                            let h = radical_inverse(i as u64 + 1, PRIMES[j]) + shift[j];
                            *uj = h - h.floor();
                        }
                        map_to_ball(&u, radius, &normal, &mut t);
                    }
                    IntegrationMode::PseudoRandom => {
                        let mut norm2 = 0.0;
                        for x in t.iter_mut() {
                            *x = rng.sample::<f64, _>(StandardNormal);
                            norm2 += *x * *x;
                        }
                        let r = radius * rng.random::<f64>().powf(1.0 / dim as f64) / norm2.sqrt().max(1e-300);
                        t.iter_mut().for_each(|x| *x *= r);
                    }
                }
                let v = f(&t);
                if !v.is_finite() {
                    return Err(Error::NonFinite { point: t.clone(), value: v });
                }
                sums.sum += v;
                sums.sum_sq += v * v;
                sums.count += 1;
            }
            Ok(sums)
        })
        .collect();

    let mut chunk_means = Vec::with_capacity(chunks);
    let (mut sum, mut sum_sq, mut count) = (0.0, 0.0, 0usize);
    for r in results {
        let s = r?;
        chunk_means.push(s.sum / s.count as f64);
        sum += s.sum;
        sum_sq += s.sum_sq;
        count += s.count;
    }
    let mean = sum / count as f64;
    let stderr = match mode {
        IntegrationMode::LowDiscrepancy => {
            let k = chunk_means.len() as f64;
            let grand = chunk_means.iter().sum::<f64>() / k;
            let var = chunk_means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (k - 1.0);
            volume * (var / k).sqrt()
        }
        IntegrationMode::PseudoRandom => {
            let var = (sum_sq / count as f64 - mean * mean).max(0.0) * count as f64 / (count as f64 - 1.0);
            volume * (var / count as f64).sqrt()
        }
    };
    Ok(BallIntegral {
        radius,
        dimension: dim,
        value: volume * mean,
        stderr,
        point_count: count,
        mode,
    })
}

/// Deterministic probe points in the ball (unshifted Halton), used for precondition checks.
pub(crate) fn probe_points(dim: usize, radius: f64, count: usize) -> Vec<Vec<f64>> {
    let normal = Normal::standard();
    let mut u = vec![0.0; dim + 1];
    (0..count)
        .map(|i| {
            for (j, uj) in u.iter_mut().enumerate() {
                *uj = radical_inverse(i as u64 + 1, PRIMES[j]);
            }
            let mut t = vec![0.0; dim];
            map_to_ball(&u, radius, &normal, &mut t);
            t
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EsseenEstimate {
    pub constant: f64,
    pub integral: BallIntegral,
    pub value: f64,
}

fn check_dim(a: &CoefficientMatrix, policy: &ConstantsPolicy) -> Result<()> {
    if a.d() > policy.max_dimension() {
        return domain(format!("policy covers d <= {}, got d = {}", policy.max_dimension(), a.d()));
    }
    Ok(())
}

/// `C_up(d) * int_{B(sqrt d)} |F_a^(t)| dt`, an upper estimate of `Q(F_a, sqrt d)`.
pub fn esseen_upper<L: CharFn + ?Sized>(
    law: &L,
    a: &CoefficientMatrix,
    policy: &ConstantsPolicy,
    opts: &IntegrationOptions,
) -> Result<EsseenEstimate> {
    check_dim(a, policy)?;
    let d = a.d();
    let integral = ball_integral(|t| cf_product(law, a, t).norm(), d, (d as f64).sqrt(), opts)?;
    let constant = policy.esseen_up(d);
    Ok(EsseenEstimate { constant, value: constant * integral.value, integral })
}

/// `C_low(d) * int_{B(sqrt d)} F_a^(t) dt` for laws whose characteristic function
/// of `S_a` is real and nonnegative on the ball.
pub fn esseen_lower<L: CharFn + ?Sized>(
    law: &L,
    a: &CoefficientMatrix,
    policy: &ConstantsPolicy,
    opts: &IntegrationOptions,
) -> Result<EsseenEstimate> {
    check_dim(a, policy)?;
    let d = a.d();
    let radius = (d as f64).sqrt();
    for t in probe_points(d, radius, 1000) {
        let v = cf_product(law, a, &t);
        if v.re < -1e-9 || v.im.abs() > 1e-9 {
            return Err(Error::Precondition(format!(
                "characteristic function {v} at {t:?} is not real and nonnegative"
            )));
        }
    }
    let integral = ball_integral(|t| cf_product(law, a, t).re.max(0.0), d, radius, opts)?;
    let constant = policy.esseen_low(d);
    Ok(EsseenEstimate { constant, value: constant * integral.value, integral })
}
