//! Concentration function `Q(F_a, lambda) = sup_x P(S_a in x + lambda B)`.
//!
//! Exact methods build the full distribution of `S_a` for finite-discrete laws:
//! a dense integer-grid convolution when `d = 1` and every atom and coefficient
//! sits on a common rational grid, otherwise a merged enumeration. Monte Carlo
//! draws `S_a` in fixed-size chunks with derived seeds.
//!
//! Balls are closed; window comparisons allow `1e-12 * (1 + 2 lambda)` slack.
//! For `d >= 2` and `lambda > 0` exact results come as a certified pair: the
//! value is attained by an explicit center, the upper bound covers every center
//! through a grid of step `lambda / 8`.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coeffs::CoefficientMatrix;
use crate::error::{domain, Error, Result};
use crate::law::{FiniteLaw, ScalarLaw, ATOM_MERGE_TOL};
use crate::seed;

/// Largest common denominator accepted by the integer-grid convolution.
pub const MAX_DENOMINATOR: u64 = 1_000_000;
/// Largest dense grid the convolution will allocate.
pub const MAX_DP_CELLS: usize = 1 << 24;
/// Largest merged support the enumeration will hold.
pub const MAX_ENUM_SUPPORT: usize = 1 << 22;
pub const MIN_MC_SAMPLES: usize = 1000;
const MC_CHUNK: usize = 4096;
const MC_CANDIDATES: usize = 256;
const MC_REFINE_SEEDS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ExactDp,
    ExactEnum,
    MonteCarlo,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::ExactDp => "exact-dp",
            Method::ExactEnum => "exact-enum",
            Method::MonteCarlo => "monte-carlo",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationEstimate {
    pub lambda: f64,
    pub value: f64,
    pub stderr: f64,
    pub method: Method,
    pub witness_center: Vec<f64>,
    /// Certified upper bound when `value` is only a certified lower bound.
    pub upper: Option<f64>,
    pub note: Option<String>,
}

impl ConcentrationEstimate {
    /// The value to compare against upper bounds: the certificate when present.
    pub fn conservative(&self) -> f64 {
        self.upper.unwrap_or(self.value)
    }
}

fn window_slack(lambda: f64) -> f64 {
    1e-12 * (1.0 + 2.0 * lambda)
}

/// Smallest denominator `q <= max_den` with `x * q` within `1e-9` of an integer.
pub(crate) fn rational_denominator(x: f64, max_den: u64) -> Option<u64> {
    let target = x.abs();
    let close = |q: f64| {
        let v = target * q;
        (v - v.round()).abs() <= 1e-9
    };
    if close(1.0) {
        return Some(1);
    }
    let (mut h0, mut h1) = (0.0_f64, 1.0_f64);
    let (mut k0, mut k1) = (1.0_f64, 0.0_f64);
    let mut r = target;
    for _ in 0..64 {
        let a = r.floor();
        let h = a * h1 + h0;
        let k = a * k1 + k0;
        if k > max_den as f64 {
            return None;
        }
        if k >= 1.0 && close(k) {
            return Some(k as u64);
        }
        let frac = r - a;
        if frac < 1e-15 {
            return None;
        }
        r = 1.0 / frac;
        (h0, h1) = (h1, h);
        (k0, k1) = (k1, k);
    }
    None
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn common_denominator(values: impl Iterator<Item = f64>, max_den: u64) -> Option<u64> {
    let mut acc = 1u64;
    for v in values {
        let q = rational_denominator(v, max_den)?;
        acc = acc / gcd(acc, q) * q;
        if acc > max_den {
            return None;
        }
    }
    Some(acc)
}

/// The exact law of `S_a` as sorted, merged support points.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactDistribution {
    d: usize,
    points: Vec<f64>,
    probs: Vec<f64>,
    method: Method,
    /// Integer grid representation `points = values / scale` (dense convolution only).
    grid: Option<(Vec<i64>, f64)>,
}

impl ExactDistribution {
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.d..(i + 1) * self.d]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn total_mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// One-dimensional view as a finite law.
    pub fn to_finite(&self) -> Option<FiniteLaw> {
        if self.d != 1 {
            return None;
        }
        let atoms = self.points.iter().zip(&self.probs).map(|(&at, &prob)| crate::law::Atom { at, prob });
        Some(FiniteLaw::from_atoms_unchecked(atoms.collect()))
    }

    pub fn concentration(&self, lambda: f64) -> Result<ConcentrationEstimate> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return domain(format!("lambda must be finite and >= 0, got {lambda}"));
        }
        if self.d == 1 {
            return Ok(self.window_1d(lambda));
        }
        Ok(self.certified_nd(lambda))
    }

    fn window_1d(&self, lambda: f64) -> ConcentrationEstimate {
        let n = self.probs.len();
        let (mut best, mut best_lo) = (0.0_f64, 0usize);
        let mut mass = 0.0;
        let mut hi = 0;
        let fits: Box<dyn Fn(usize, usize) -> bool + '_> = match &self.grid {
            Some((values, scale)) => {
                let width = (2.0 * lambda * scale * (1.0 + 1e-12) + 1e-9).floor() as i64;
                Box::new(move |lo, hi| values[hi] - values[lo] <= width)
            }
            None => {
                let width = 2.0 * lambda + window_slack(lambda);
                Box::new(move |lo, hi| self.points[hi] - self.points[lo] <= width)
            }
        };
        for lo in 0..n {
            while hi < n && fits(lo, hi) {
                mass += self.probs[hi];
                hi += 1;
            }
            if mass > best {
                best = mass;
                best_lo = lo;
            }
            mass -= self.probs[lo];
        }
        ConcentrationEstimate {
            lambda,
            value: best.min(1.0),
            stderr: 0.0,
            method: self.method,
            witness_center: vec![self.points.get(best_lo).copied().unwrap_or(0.0) + lambda],
            upper: None,
            note: None,
        }
    }

    fn certified_nd(&self, lambda: f64) -> ConcentrationEstimate {
        let d = self.d;
        if lambda == 0.0 {
            let (i, &p) = self
                .probs
                .iter()
                .enumerate()
                .fold((0, &0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            return ConcentrationEstimate {
                lambda,
                value: p,
                stderr: 0.0,
                method: self.method,
                witness_center: self.point(i).to_vec(),
                upper: Some(p),
                note: None,
            };
        }
        let slack = window_slack(lambda);
        let step = lambda / 8.0;
        let inflated = lambda + 0.5 * step * (d as f64).sqrt();

        // Lower: every support point as a candidate center.
        let order = {
            let mut idx: Vec<usize> = (0..self.len()).collect();
            idx.sort_by(|&i, &j| self.point(i)[0].total_cmp(&self.point(j)[0]));
            idx
        };
        let firsts: Vec<f64> = order.iter().map(|&i| self.point(i)[0]).collect();
        let ball_mass = |c: &[f64], r: f64| -> f64 {
            let lo = firsts.partition_point(|&x| x < c[0] - r - slack);
            let hi = firsts.partition_point(|&x| x <= c[0] + r + slack);
            order[lo..hi]
                .iter()
                .filter(|&&i| dist2(self.point(i), c) <= (r + slack).powi(2))
                .map(|&i| self.probs[i])
                .sum()
        };
        let mut lower = 0.0_f64;
        let mut witness = self.point(0).to_vec();
        for i in 0..self.len() {
            let m = ball_mass(self.point(i), lambda);
            if m > lower {
                lower = m;
                witness = self.point(i).to_vec();
            }
        }

        // Upper: each grid center collects mass within the inflated radius; any
        // center lies within step * sqrt(d) / 2 of a grid center.
        let mut cells: HashMap<Vec<i64>, (f64, f64)> = HashMap::new();
        let mut lo_idx = vec![0i64; d];
        let mut hi_idx = vec![0i64; d];
        let mut cur = vec![0i64; d];
        let mut c = vec![0.0; d];
        for i in 0..self.len() {
            let p = self.point(i);
            for j in 0..d {
                lo_idx[j] = ((p[j] - inflated) / step).ceil() as i64;
                hi_idx[j] = ((p[j] + inflated) / step).floor() as i64;
            }
            cur.copy_from_slice(&lo_idx);
            'outer: loop {
                for j in 0..d {
                    c[j] = cur[j] as f64 * step;
                }
                let r2 = dist2(p, &c);
                if r2 <= (inflated + slack).powi(2) {
                    let e = cells.entry(cur.clone()).or_insert((0.0, 0.0));
                    e.0 += self.probs[i];
                    if r2 <= (lambda + slack).powi(2) {
                        e.1 += self.probs[i];
                    }
                }
                for j in 0..d {
                    if cur[j] < hi_idx[j] {
                        cur[j] += 1;
                        continue 'outer;
                    }
                    cur[j] = lo_idx[j];
                }
                break;
            }
        }
        let mut upper = 0.0_f64;
        let mut best_grid: Option<(&Vec<i64>, f64)> = None;
        for (key, &(up, low)) in &cells {
            upper = upper.max(up);
            let better = match best_grid {
                None => true,
                Some((k, v)) => low > v || (low == v && key < k),
            };
            if better {
                best_grid = Some((key, low));
            }
        }
        if let Some((key, low)) = best_grid {
            if low > lower {
                lower = low;
                witness = key.iter().map(|&k| k as f64 * step).collect();
            }
        }
        let upper = upper.min(1.0).max(lower);
        ConcentrationEstimate {
            lambda,
            value: lower.min(1.0),
            stderr: 0.0,
            method: self.method,
            witness_center: witness,
            upper: Some(upper),
            note: Some(format!("certified lower bound; covering-grid upper bound at step {step}")),
        }
    }
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

fn require_finite(law: &ScalarLaw) -> Result<FiniteLaw> {
    law.to_finite()
        .ok_or_else(|| Error::Domain(format!("exact methods need a finite-discrete law, got {}", law.name())))
}

/// Exact distribution of `S_a` for a finite-discrete law.
pub fn exact_distribution(law: &ScalarLaw, a: &CoefficientMatrix) -> Result<ExactDistribution> {
    let finite = require_finite(law)?;
    if a.d() == 1 {
        if let Some(dist) = integer_grid_convolution(&finite, a)? {
            return Ok(dist);
        }
    }
    enumerate(&finite, a)
}

fn integer_grid_convolution(law: &FiniteLaw, a: &CoefficientMatrix) -> Result<Option<ExactDistribution>> {
    let coeffs: Vec<f64> = a.rows().map(|r| r[0]).collect();
    let Some(q_atoms) = common_denominator(law.atoms().iter().map(|x| x.at), MAX_DENOMINATOR) else {
        return Ok(None);
    };
    let Some(q_coef) = common_denominator(coeffs.iter().copied(), MAX_DENOMINATOR) else {
        return Ok(None);
    };
    let scale = q_atoms.checked_mul(q_coef).filter(|&s| s <= MAX_DENOMINATOR);
    let Some(scale) = scale else { return Ok(None) };
    let atom_int: Vec<i64> = law.atoms().iter().map(|x| (x.at * q_atoms as f64).round() as i64).collect();
    let coef_int: Vec<i64> = coeffs.iter().map(|c| (c * q_coef as f64).round() as i64).collect();
    let probs: Vec<f64> = law.atoms().iter().map(|x| x.prob).collect();

    let mut span: i64 = 0;
    for &b in &coef_int {
        let (mn, mx) = atom_int.iter().fold((i64::MAX, i64::MIN), |(mn, mx), &x| (mn.min(x * b), mx.max(x * b)));
        span += mx - mn;
        if span as usize >= MAX_DP_CELLS {
            return Err(Error::Capacity(format!(
                "integer-grid convolution needs more than {MAX_DP_CELLS} cells"
            )));
        }
    }

    let mut lo: i64 = 0;
    let mut dense = vec![1.0_f64];
    let mut next = Vec::new();
    for &b in &coef_int {
        let vals: Vec<i64> = atom_int.iter().map(|&x| x * b).collect();
        let vmin = *vals.iter().min().expect("nonempty law");
        let vmax = *vals.iter().max().expect("nonempty law");
        let width = (vmax - vmin) as usize;
        next.clear();
        next.resize(dense.len() + width, 0.0);
        for (v, &p) in vals.iter().zip(&probs) {
            let shift = (v - vmin) as usize;
            let out = &mut next[shift..shift + dense.len()];
            for (o, &x) in out.iter_mut().zip(&dense) {
                *o += p * x;
            }
        }
        lo += vmin;
        std::mem::swap(&mut dense, &mut next);
    }
    let mut values = Vec::new();
    let mut points = Vec::new();
    let mut out_probs = Vec::new();
    for (i, &p) in dense.iter().enumerate() {
        if p > 0.0 {
            let v = lo + i as i64;
            values.push(v);
            points.push(v as f64 / scale as f64);
            out_probs.push(p);
        }
    }
    Ok(Some(ExactDistribution {
        d: 1,
        points,
        probs: out_probs,
        method: Method::ExactDp,
        grid: Some((values, scale as f64)),
    }))
}

fn quantize(x: f64) -> Result<i64> {
    let q = (x / ATOM_MERGE_TOL).round();
    if q.abs() > 9.0e18 {
        return Err(Error::Capacity(format!("support point {x} too large to merge at 1e-12")));
    }
    Ok(q as i64)
}

fn enumerate(law: &FiniteLaw, a: &CoefficientMatrix) -> Result<ExactDistribution> {
    let d = a.d();
    let mut points: Vec<f64> = vec![0.0; d];
    let mut probs: Vec<f64> = vec![1.0];
    for row in a.rows() {
        let size = probs.len() * law.len();
        if size > MAX_ENUM_SUPPORT * law.len().max(2) {
            return Err(Error::Capacity(format!(
                "enumeration support {} exceeds {MAX_ENUM_SUPPORT}",
                size
            )));
        }
        let mut cand: Vec<(Vec<i64>, usize)> = Vec::with_capacity(size);
        let mut cand_points = Vec::with_capacity(size * d);
        let mut cand_probs = Vec::with_capacity(size);
        for i in 0..probs.len() {
            let base = &points[i * d..(i + 1) * d];
            for atom in law.atoms() {
                let idx = cand_probs.len();
                let mut key = Vec::with_capacity(d);
                for j in 0..d {
                    let x = base[j] + atom.at * row[j];
                    cand_points.push(x);
                    key.push(quantize(x)?);
                }
                cand.push((key, idx));
                cand_probs.push(probs[i] * atom.prob);
            }
        }
        cand.sort();
        points.clear();
        probs.clear();
        let mut last: Option<&Vec<i64>> = None;
        for (key, idx) in &cand {
            if last == Some(key) {
                *probs.last_mut().expect("merged entry") += cand_probs[*idx];
            } else {
                points.extend_from_slice(&cand_points[idx * d..(idx + 1) * d]);
                probs.push(cand_probs[*idx]);
                last = Some(key);
            }
        }
        if probs.len() > MAX_ENUM_SUPPORT {
            return Err(Error::Capacity(format!(
                "enumeration support {} exceeds {MAX_ENUM_SUPPORT}",
                probs.len()
            )));
        }
    }
    Ok(ExactDistribution { d, points, probs, method: Method::ExactEnum, grid: None })
}

/// Exact `Q(F_a, lambda)` for a finite-discrete law.
pub fn exact_q(law: &ScalarLaw, a: &CoefficientMatrix, lambda: f64) -> Result<ConcentrationEstimate> {
    exact_distribution(law, a)?.concentration(lambda)
}

/// Monte Carlo realizations of `S_a`, reusable across radii.
#[derive(Debug, Clone, PartialEq)]
pub struct McSample {
    d: usize,
    points: Vec<f64>,
    sorted_1d: Option<Vec<f64>>,
}

pub fn draw_samples(law: &ScalarLaw, a: &CoefficientMatrix, samples: usize, seed: u64) -> Result<McSample> {
    if samples < MIN_MC_SAMPLES {
        return domain(format!("need at least {MIN_MC_SAMPLES} samples, got {samples}"));
    }
    let d = a.d();
    let sampler = law.sampler();
    let chunks = samples.div_ceil(MC_CHUNK);
    let parts: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = seed::rng_for(seed, c as u64);
            let count = MC_CHUNK.min(samples - c * MC_CHUNK);
            let mut out = vec![0.0; count * d];
            for s in out.chunks_exact_mut(d) {
                for row in a.rows() {
                    let x = sampler.sample(&mut rng);
                    for j in 0..d {
                        s[j] += x * row[j];
                    }
                }
            }
            out
        })
        .collect();
    let points: Vec<f64> = parts.concat();
    let sorted_1d = (d == 1).then(|| {
        let mut v = points.clone();
        v.sort_by(f64::total_cmp);
        v
    });
    Ok(McSample { d, points, sorted_1d })
}

impl McSample {
    pub fn len(&self) -> usize {
        self.points.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.d..(i + 1) * self.d]
    }

    pub fn concentration(&self, lambda: f64) -> Result<ConcentrationEstimate> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return domain(format!("Monte Carlo needs lambda > 0, got {lambda}"));
        }
        let n = self.len();
        let (count, center, note) = match &self.sorted_1d {
            Some(xs) => {
                let width = 2.0 * lambda + window_slack(lambda);
                let (mut best, mut best_lo, mut hi) = (0usize, 0usize, 0usize);
                for lo in 0..n {
                    while hi < n && xs[hi] - xs[lo] <= width {
                        hi += 1;
                    }
                    if hi - lo > best {
                        best = hi - lo;
                        best_lo = lo;
                    }
                }
                (best, vec![xs[best_lo] + lambda], None)
            }
            None => {
                let (c, center) = self.sup_search_nd(lambda);
                let note = "empirical sup over sample-point centers with local grid refinement; \
                            lower-biased relative to the empirical Q"
                    .to_string();
                (c, center, Some(note))
            }
        };
        let value = count as f64 / n as f64;
        Ok(ConcentrationEstimate {
            lambda,
            value,
            stderr: (value * (1.0 - value) / n as f64).sqrt(),
            method: Method::MonteCarlo,
            witness_center: center,
            upper: None,
            note,
        })
    }

    fn sup_search_nd(&self, lambda: f64) -> (usize, Vec<f64>) {
        let d = self.d;
        let n = self.len();
        let cell = lambda;
        let key_of = |p: &[f64]| -> Vec<i64> { p.iter().map(|x| (x / cell).floor() as i64).collect() };
        let mut grid: HashMap<Vec<i64>, Vec<u32>> = HashMap::new();
        for i in 0..n {
            grid.entry(key_of(self.point(i))).or_default().push(i as u32);
        }
        let r2 = (lambda + window_slack(lambda)).powi(2);
        let neighbors: Vec<Vec<i64>> = {
            let mut out = vec![vec![]];
            for _ in 0..d {
                out = out
                    .into_iter()
                    .flat_map(|v: Vec<i64>| {
                        (-1..=1).map(move |o| {
                            let mut w = v.clone();
                            w.push(o);
                            w
                        })
                    })
                    .collect();
            }
            out
        };
        let count = |c: &[f64]| -> usize {
            let base = key_of(c);
            let mut total = 0;
            let mut key = vec![0i64; d];
            for off in &neighbors {
                for j in 0..d {
                    key[j] = base[j] + off[j];
                }
                if let Some(list) = grid.get(&key) {
                    total += list.iter().filter(|&&i| dist2(self.point(i as usize), c) <= r2).count();
                }
            }
            total
        };
        let candidates = n.min(MC_CANDIDATES);
        let mut scored: Vec<(usize, usize)> = (0..candidates)
            .into_par_iter()
            .map(|i| (count(self.point(i)), i))
            .collect();
        scored.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        let refined: Vec<(usize, Vec<f64>)> = scored
            .iter()
            .take(MC_REFINE_SEEDS)
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|&(c0, i)| {
                let step = lambda / 4.0;
                let mut center = self.point(i).to_vec();
                let mut best = c0;
                for _ in 0..64 {
                    let mut improved = None;
                    for j in 0..d {
                        for sgn in [-1.0, 1.0] {
                            let mut trial = center.clone();
                            trial[j] += sgn * step;
                            let c = count(&trial);
                            if c > best {
                                best = c;
                                improved = Some(trial);
                            }
                        }
                    }
                    match improved {
                        Some(t) => center = t,
                        None => break,
                    }
                }
                (best, center)
            })
            .collect();
        // Ties resolve to the earliest seed, independent of scheduling.
        refined
            .into_iter()
            .fold((0usize, self.point(0).to_vec()), |acc, x| if x.0 > acc.0 { x } else { acc })
    }
}

pub fn mc_q(
    law: &ScalarLaw,
    a: &CoefficientMatrix,
    lambda: f64,
    samples: usize,
    seed: u64,
) -> Result<ConcentrationEstimate> {
    if !(lambda > 0.0) {
        return domain(format!("Monte Carlo needs lambda > 0, got {lambda}"));
    }
    draw_samples(law, a, samples, seed)?.concentration(lambda)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScanMethod {
    Exact,
    MonteCarlo { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub estimate: ConcentrationEstimate,
    /// `max_mu Q(mu) / ((1 + mu/lambda)^d Q(lambda))` over the other grid radii.
    pub ratio_envelope: f64,
}

/// `Q` across a grid of radii with growth-ratio diagnostics.
pub fn q_ratio_scan(
    law: &ScalarLaw,
    a: &CoefficientMatrix,
    lambdas: &[f64],
    method: ScanMethod,
) -> Result<Vec<ScanRow>> {
    if lambdas.is_empty() {
        return domain("empty lambda grid");
    }
    let estimates: Vec<ConcentrationEstimate> = match method {
        ScanMethod::Exact => {
            let dist = exact_distribution(law, a)?;
            lambdas.iter().map(|&l| dist.concentration(l)).collect::<Result<_>>()?
        }
        ScanMethod::MonteCarlo { samples, seed } => {
            let sample = draw_samples(law, a, samples, seed)?;
            lambdas.iter().map(|&l| sample.concentration(l)).collect::<Result<_>>()?
        }
    };
    let d = a.d() as i32;
    let rows = estimates
        .iter()
        .map(|e| {
            let envelope = estimates
                .iter()
                .filter(|o| o.lambda != e.lambda && e.value > 0.0 && e.lambda > 0.0)
                .map(|o| o.value / ((1.0 + o.lambda / e.lambda).powi(d) * e.value))
                .fold(0.0, f64::max);
            ScanRow { estimate: e.clone(), ratio_envelope: envelope }
        })
        .collect();
    Ok(rows)
}

/// Exact sum `sum_i X_i a_i` evaluated at one atom choice per row; test helper.
#[doc(hidden)]
pub fn weighted_sum(xs: &[f64], a: &CoefficientMatrix) -> Vec<f64> {
    let mut out = vec![0.0; a.d()];
    for (x, row) in xs.iter().zip(a.rows()) {
        for j in 0..a.d() {
            out[j] += x * row[j];
        }
    }
    out
}
