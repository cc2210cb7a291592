//! Diophantine structure of the coefficients: condition margins and the
//! essential least common denominator.
//!
//! Both searches are heuristic global minimizations (grid scan, then pattern
//! search). Margins carry a Lipschitz certificate: `t -> dist(t . a, Z^n)` is
//! `sqrt(lambda_max(N))`-Lipschitz, so the grid minimum over a relaxed region
//! minus `sqrt(lambda_max) * covering_radius` bounds the true minimum from below.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::charfn::ball_volume;
use crate::coeffs::{gram, norm, CoefficientMatrix};
use crate::error::{domain, Result};

pub const DEFAULT_SCAN_POINTS: usize = 1 << 17;
pub const DEFAULT_SEEDS: usize = 32;
pub const DEFAULT_ITERATIONS: usize = 60;
pub const DEFAULT_LCD_POINTS: usize = 1 << 21;
const LCD_BISECTIONS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MarginOptions {
    pub points: usize,
    pub seeds: usize,
    pub iterations: usize,
}

impl Default for MarginOptions {
    fn default() -> Self {
        MarginOptions { points: DEFAULT_SCAN_POINTS, seeds: DEFAULT_SEEDS, iterations: DEFAULT_ITERATIONS }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionMargin {
    #[serde(rename = "D")]
    pub radius: f64,
    pub gamma: Option<f64>,
    /// Smallest lattice distance found over the constrained region.
    pub alpha_star: f64,
    pub witness_t: Vec<f64>,
    /// Lower bound on the true minimum; this is the alpha to feed into bounds.
    pub certified_lower: f64,
    pub grid_step: f64,
    pub covering_radius: f64,
    /// No admissible `t` exists (or none was found for the `gamma` form).
    pub vacuous: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LcdOptions {
    /// Defaults to `alpha / (10 sqrt(lambda_max))`.
    pub grid_step: Option<f64>,
    /// Cap on grid points; the step grows to respect it. Defaults to 2^21.
    pub max_points: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LcdResult {
    pub gamma: f64,
    pub alpha: f64,
    /// Norm of the best feasible witness; an upper bound on `D(a)`.
    #[serde(rename = "D_hat")]
    pub d_hat: f64,
    pub witness_t: Vec<f64>,
    pub scan_radius: f64,
    pub grid_step: f64,
    pub feasible_found: bool,
}

struct Grid {
    d: usize,
    per_axis: usize,
    lo: f64,
    step: f64,
}

impl Grid {
    fn cube(d: usize, half_width: f64, points: usize) -> Grid {
        let per_axis = if d == 1 {
            points.max(2)
        } else {
            ((points as f64).powf(1.0 / d as f64).floor() as usize).max(2)
        };
        let step = 2.0 * half_width / (per_axis - 1) as f64;
        Grid { d, per_axis, lo: -half_width, step }
    }

    fn len(&self) -> usize {
        self.per_axis.pow(self.d as u32)
    }

    fn point(&self, mut idx: usize, out: &mut [f64]) {
        for x in out.iter_mut() {
            let i = idx % self.per_axis;
            idx /= self.per_axis;
            *x = if i == self.per_axis - 1 { -self.lo } else { self.lo + i as f64 * self.step };
        }
    }

    fn covering_radius(&self) -> f64 {
        0.5 * self.step * (self.d as f64).sqrt()
    }
}

/// Coordinate pattern search keeping every iterate feasible.
fn pattern_search(
    start: Vec<f64>,
    start_val: f64,
    step0: f64,
    iterations: usize,
    f: impl Fn(&[f64]) -> f64,
    feasible: impl Fn(&[f64]) -> bool,
) -> (Vec<f64>, f64) {
    let (mut t, mut val, mut step) = (start, start_val, step0);
    let mut trial = t.clone();
    for _ in 0..iterations {
        let mut best: Option<(Vec<f64>, f64)> = None;
        for j in 0..t.len() {
            for sgn in [-1.0, 1.0] {
                trial.copy_from_slice(&t);
                trial[j] += sgn * step;
                if !feasible(&trial) {
                    continue;
                }
                let v = f(&trial);
                if v < best.as_ref().map_or(val, |b| b.1) {
                    best = Some((trial.clone(), v));
                }
            }
        }
        match best {
            Some((bt, bv)) => {
                t = bt;
                val = bv;
            }
            None => step *= 0.5,
        }
    }
    (t, val)
}

struct MarginProblem<'a> {
    a: &'a CoefficientMatrix,
    radius: f64,
    opts: MarginOptions,
    /// Strict membership of the constrained region.
    strict: Box<dyn Fn(&[f64]) -> bool + Sync + 'a>,
    /// Membership relaxed by the covering radius.
    relaxed: Box<dyn Fn(&[f64]) -> bool + Sync + 'a>,
    grid: Grid,
    lipschitz: f64,
    gamma: Option<f64>,
}

fn solve_margin(p: MarginProblem<'_>, extra_seeds: Vec<Vec<f64>>) -> ConditionMargin {
    let d = p.a.d();
    let r = p.grid.covering_radius();
    let evals: Vec<(usize, f64, bool, bool)> = (0..p.grid.len())
        .into_par_iter()
        .map_init(
            || vec![0.0; d],
            |buf, idx| {
                p.grid.point(idx, buf);
                let relaxed = (p.relaxed)(buf);
                if !relaxed {
                    return (idx, f64::INFINITY, false, false);
                }
                (idx, p.a.lattice_dist_at(buf), (p.strict)(buf), true)
            },
        )
        .collect();
    let relaxed_min = evals.iter().filter(|e| e.3).map(|e| e.1).fold(f64::INFINITY, f64::min);
    let mut seeds: Vec<(f64, Vec<f64>)> = evals
        .iter()
        .filter(|e| e.2)
        .map(|e| {
            let mut t = vec![0.0; d];
            p.grid.point(e.0, &mut t);
            (e.1, t)
        })
        .collect();
    seeds.sort_by(|x, y| x.0.total_cmp(&y.0));
    seeds.truncate(p.opts.seeds);
    for t in extra_seeds {
        if (p.strict)(&t) {
            seeds.push((p.a.lattice_dist_at(&t), t));
        }
    }
    let refined: Vec<(Vec<f64>, f64)> = seeds
        .into_par_iter()
        .map(|(v, t)| {
            pattern_search(t, v, p.grid.step, p.opts.iterations, |x| p.a.lattice_dist_at(x), |x| (p.strict)(x))
        })
        .collect();
    let best = refined
        .into_iter()
        .fold(None::<(Vec<f64>, f64)>, |acc, x| match acc {
            Some(b) if b.1 <= x.1 => Some(b),
            _ => Some(x),
        });
    let certified = (relaxed_min - p.lipschitz * r).max(0.0);
    match best {
        Some((t, v)) => {
            let alpha_star = p.a.lattice_dist_at(&t);
            debug_assert!((alpha_star - v).abs() <= 1e-12);
            ConditionMargin {
                radius: p.radius,
                gamma: p.gamma,
                alpha_star,
                witness_t: t,
                certified_lower: certified.min(alpha_star),
                grid_step: p.grid.step,
                covering_radius: r,
                vacuous: false,
            }
        }
        None => ConditionMargin {
            radius: p.radius,
            gamma: p.gamma,
            alpha_star: f64::INFINITY,
            witness_t: Vec::new(),
            certified_lower: if relaxed_min.is_finite() { certified } else { f64::INFINITY },
            grid_step: p.grid.step,
            covering_radius: r,
            vacuous: true,
        },
    }
}

/// Seeds `+-D a_k / |a_k|`, each admissible whenever `D |a_k| >= 1/2`.
fn axis_seeds(a: &CoefficientMatrix, radius: f64) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for row in a.rows() {
        let n = norm(row);
        if n > 0.0 {
            for s in [1.0, -1.0] {
                out.push(row.iter().map(|x| s * radius * x / n).collect());
            }
        }
    }
    out
}

/// `min dist(t . a, Z^n)` over `|t| <= D`, `max_k |<t, a_k>| >= 1/2`.
pub fn condition_margin(a: &CoefficientMatrix, radius: f64, opts: &MarginOptions) -> Result<ConditionMargin> {
    if !(radius > 0.0) || !radius.is_finite() {
        return domain(format!("D must be finite and > 0, got {radius}"));
    }
    check_opts(opts)?;
    let g = gram(a);
    let grid = Grid::cube(a.d(), radius, opts.points);
    let r = grid.covering_radius();
    let max_row = a.max_row_norm();
    if radius * max_row < 0.5 {
        return Ok(ConditionMargin {
            radius,
            gamma: None,
            alpha_star: f64::INFINITY,
            witness_t: Vec::new(),
            certified_lower: f64::INFINITY,
            grid_step: grid.step,
            covering_radius: r,
            vacuous: true,
        });
    }
    let problem = MarginProblem {
        a,
        radius,
        opts: *opts,
        strict: Box::new(move |t| norm(t) <= radius && a.max_abs_projection(t) >= 0.5),
        relaxed: Box::new(move |t| norm(t) <= radius + r && a.max_abs_projection(t) >= 0.5 - r * max_row),
        grid,
        lipschitz: g.lipschitz(),
        gamma: None,
    };
    Ok(solve_margin(problem, axis_seeds(a, radius)))
}

/// The largest `alpha` for which `dist(t . a, Z^n) >= min{gamma |t . a|, alpha}`
/// on `|t| <= D`: the minimum of `dist` over points where `dist < gamma |t . a|`.
///
/// Points with `max_k |<t, a_k>| <= 1/2` have `dist = |t . a|` and never bind.
pub fn condition_margin_gamma(
    a: &CoefficientMatrix,
    radius: f64,
    gamma: f64,
    opts: &MarginOptions,
) -> Result<ConditionMargin> {
    if !(radius > 0.0) || !radius.is_finite() {
        return domain(format!("D must be finite and > 0, got {radius}"));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return domain(format!("gamma must lie in (0, 1), got {gamma}"));
    }
    check_opts(opts)?;
    let g = gram(a);
    let lip = g.lipschitz();
    let grid = Grid::cube(a.d(), radius, opts.points);
    let r = grid.covering_radius();
    let max_row = a.max_row_norm();
    let no_region = radius * max_row < 0.5;
    let problem = MarginProblem {
        a,
        radius,
        opts: *opts,
        strict: Box::new(move |t| {
            !no_region
                && norm(t) <= radius
                && a.max_abs_projection(t) >= 0.5
                && a.lattice_dist_at(t) < gamma * a.projection_norm(t)
        }),
        relaxed: Box::new(move |t| {
            !no_region
                && norm(t) <= radius + r
                && a.max_abs_projection(t) >= 0.5 - r * max_row
                && a.lattice_dist_at(t) < gamma * a.projection_norm(t) + (1.0 + gamma) * lip * r
        }),
        grid,
        lipschitz: lip,
        gamma: Some(gamma),
    };
    Ok(solve_margin(problem, axis_seeds(a, radius)))
}

fn check_opts(opts: &MarginOptions) -> Result<()> {
    if opts.points < 2 || opts.seeds == 0 {
        return domain("margin search needs points >= 2 and seeds >= 1");
    }
    Ok(())
}

/// Smallest-norm `t != 0` found with `dist(t . a, Z^n) <= min{gamma |t . a|, alpha}`.
pub fn essential_lcd(
    a: &CoefficientMatrix,
    gamma: f64,
    alpha: f64,
    scan_radius: f64,
    opts: &LcdOptions,
) -> Result<LcdResult> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return domain(format!("gamma must lie in (0, 1), got {gamma}"));
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return domain(format!("alpha must be finite and > 0, got {alpha}"));
    }
    if !(scan_radius > 0.0) || !scan_radius.is_finite() {
        return domain(format!("scan_radius must be finite and > 0, got {scan_radius}"));
    }
    let lip = gram(a).lipschitz();
    let d = a.d();
    let max_points = opts.max_points.unwrap_or(DEFAULT_LCD_POINTS).max(16);
    let mut step = match opts.grid_step {
        Some(s) if s > 0.0 && s.is_finite() => s,
        Some(s) => return domain(format!("grid_step must be finite and > 0, got {s}")),
        None if lip > 0.0 => alpha / (10.0 * lip),
        None => scan_radius / 16.0,
    };
    let estimate = if d == 1 {
        scan_radius / step
    } else {
        0.5 * ball_volume(d, scan_radius) / step.powi(d as i32)
    };
    if estimate > max_points as f64 {
        step *= (estimate / max_points as f64).powf(1.0 / d as f64);
    }
    let feasible = |t: &[f64]| a.lattice_dist_at(t) <= (gamma * a.projection_norm(t)).min(alpha);
    let found = if d == 1 { lcd_scan_1d(scan_radius, step, &feasible) } else { lcd_scan_nd(d, scan_radius, step, &feasible) };
    Ok(match found {
        Some(t) => LcdResult {
            gamma,
            alpha,
            d_hat: norm(&t),
            witness_t: t,
            scan_radius,
            grid_step: step,
            feasible_found: true,
        },
        None => LcdResult {
            gamma,
            alpha,
            d_hat: f64::INFINITY,
            witness_t: Vec::new(),
            scan_radius,
            grid_step: step,
            feasible_found: false,
        },
    })
}

/// Shrinks `t` along its ray to the innermost feasible radius reachable by bisection.
fn radial_bisect(t: &[f64], lo_scale: f64, feasible: &(impl Fn(&[f64]) -> bool + Sync)) -> Vec<f64> {
    let scaled = |s: f64| -> Vec<f64> { t.iter().map(|x| x * s).collect() };
    let (mut lo, mut hi) = (lo_scale, 1.0);
    if feasible(&scaled(lo)) {
        return scaled(lo);
    }
    for _ in 0..LCD_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if feasible(&scaled(mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    scaled(hi)
}

fn lcd_scan_1d(radius: f64, step: f64, feasible: &(impl Fn(&[f64]) -> bool + Sync)) -> Option<Vec<f64>> {
    let count = (radius / step).floor() as usize;
    const CHUNK: usize = 1 << 14;
    let chunks = count.div_ceil(CHUNK);
    let batch = rayon::current_num_threads().max(1) * 2;
    for start in (0..chunks).step_by(batch) {
        let firsts: Vec<Option<usize>> = (start..(start + batch).min(chunks))
            .into_par_iter()
            .map(|c| ((c * CHUNK + 1)..=((c + 1) * CHUNK).min(count)).find(|&i| feasible(&[i as f64 * step])))
            .collect();
        if let Some(i) = firsts.into_iter().flatten().next() {
            let t = i as f64 * step;
            if i == 1 {
                return Some(vec![t]);
            }
            let prev = (i - 1) as f64 * step;
            return Some(radial_bisect(&[t], prev / t, feasible));
        }
    }
    None
}

fn lcd_scan_nd(d: usize, radius: f64, step: f64, feasible: &(impl Fn(&[f64]) -> bool + Sync)) -> Option<Vec<f64>> {
    let m = (radius / step).floor() as i64;
    // Half-space: first nonzero coordinate positive, since dist is even in t.
    let mut pts: Vec<(f64, Vec<i64>)> = Vec::new();
    let side = (2 * m + 1) as usize;
    let total = side.pow(d as u32);
    let mut idx = vec![0i64; d];
    for code in 0..total {
        let mut c = code;
        for x in idx.iter_mut() {
            *x = (c % side) as i64 - m;
            c /= side;
        }
        match idx.iter().find(|&&x| x != 0) {
            Some(&x) if x > 0 => {}
            _ => continue,
        }
        let r = step * (idx.iter().map(|&x| (x * x) as f64).sum::<f64>()).sqrt();
        if r <= radius {
            pts.push((r, idx.clone()));
        }
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
    let width = 4.0 * step;
    let to_t = |i: &[i64]| -> Vec<f64> { i.iter().map(|&x| x as f64 * step).collect() };
    let mut start = 0;
    while start < pts.len() {
        // Two consecutive annuli; a refined point from the outer one may land inside.
        let shell = (pts[start].0 / width).floor();
        let end = pts[start..].partition_point(|p| (p.0 / width).floor() <= shell + 1.0) + start;
        let hits: Vec<usize> = (start..end)
            .into_par_iter()
            .filter(|&k| feasible(&to_t(&pts[k].1)))
            .collect();
        if !hits.is_empty() {
            let candidates: Vec<Vec<f64>> = hits.iter().take(16).map(|&k| to_t(&pts[k].1)).collect();
            let refined: Vec<Vec<f64>> = candidates
                .into_par_iter()
                .map(|t| refine_min_norm(t, step, feasible))
                .collect();
            return refined.into_iter().fold(None, |acc: Option<Vec<f64>>, t| match acc {
                Some(b) if norm(&b) <= norm(&t) => Some(b),
                _ => Some(t),
            });
        }
        start = pts[start..].partition_point(|p| (p.0 / width).floor() <= shell) + start;
    }
    None
}

fn refine_min_norm(t: Vec<f64>, step: f64, feasible: &(impl Fn(&[f64]) -> bool + Sync)) -> Vec<f64> {
    let shrink = |t: &[f64]| {
        let r = norm(t);
        radial_bisect(t, ((r - 2.0 * step) / r).max(0.5 * step / r), feasible)
    };
    let start = shrink(&t);
    let start_norm = norm(&start);
    let (best, _) = pattern_search(
        start,
        start_norm,
        step,
        DEFAULT_ITERATIONS,
        norm,
        |x| norm(x) > 0.0 && feasible(x),
    );
    let out = shrink(&best);
    if feasible(&out) { out } else { best }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::lattice_dist;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;

    const PHI: f64 = 1.618_033_988_7;

    fn small() -> MarginOptions {
        MarginOptions { points: 1 << 12, ..MarginOptions::default() }
    }

    #[test]
    fn margin_examples() {
        let m = condition_margin(&CoefficientMatrix::ones(4).unwrap(), 1.0, &MarginOptions::default()).unwrap();
        assert_eq!(m.alpha_star, 0.0);
        assert_eq!(m.witness_t[0].abs(), 1.0);
        assert_eq!(m.certified_lower, 0.0);

        let m = condition_margin(&CoefficientMatrix::scalar(&[0.5]).unwrap(), 1.0, &MarginOptions::default()).unwrap();
        assert_abs_diff_eq!(m.alpha_star, 0.5, epsilon = 1e-12);
        assert_eq!(m.witness_t[0].abs(), 1.0);
        assert!(m.certified_lower <= m.alpha_star);
    }

    #[test]
    fn margin_vacuous_region() {
        let m = condition_margin(&CoefficientMatrix::scalar(&[0.1, 0.2]).unwrap(), 1.0, &small()).unwrap();
        assert!(m.vacuous);
        assert_eq!(m.alpha_star, f64::INFINITY);
        assert_eq!(m.certified_lower, f64::INFINITY);
    }

    #[test]
    fn margin_rejects_bad_radius() {
        let a = CoefficientMatrix::ones(2).unwrap();
        assert!(condition_margin(&a, 0.0, &small()).is_err());
        assert!(condition_margin(&a, f64::NAN, &small()).is_err());
        assert!(condition_margin_gamma(&a, 1.0, 1.0, &small()).is_err());
    }

    #[test]
    fn margin_scale_reparametrization() {
        let a = CoefficientMatrix::random_sphere(6, 2, 11, 1.0).unwrap();
        let m1 = condition_margin(&a, 1.5, &MarginOptions::default()).unwrap();
        let m2 = condition_margin(&a.scaled(10.0), 0.15, &MarginOptions::default()).unwrap();
        assert_abs_diff_eq!(m1.alpha_star, m2.alpha_star, epsilon = 1e-8);
        let b = CoefficientMatrix::scalar(&[0.3, 0.71, 1.9]).unwrap();
        let m1 = condition_margin(&b, 2.0, &MarginOptions::default()).unwrap();
        let m2 = condition_margin(&b.scaled(10.0), 0.2, &MarginOptions::default()).unwrap();
        assert_abs_diff_eq!(m1.alpha_star, m2.alpha_star, epsilon = 1e-8);
    }

    #[test]
    fn margin_witness_and_probes() {
        let mut rng = crate::seed::rng_for(99, 0);
        for seed in 0..4 {
            let a = CoefficientMatrix::random_sphere(10, 2, seed, 1.3).unwrap();
            let radius = 2.0_f64.sqrt();
            let m = condition_margin(&a, radius, &MarginOptions::default()).unwrap();
            assert!(norm(&m.witness_t) <= radius + 1e-12);
            assert!(a.max_abs_projection(&m.witness_t) >= 0.5 - 1e-12);
            assert_abs_diff_eq!(m.alpha_star, lattice_dist(&a.project(&m.witness_t).unwrap()), epsilon = 1e-10);
            assert!(m.certified_lower <= m.alpha_star);
            let mut probes = 0;
            while probes < 1000 {
                let t = [rng.random_range(-radius..radius), rng.random_range(-radius..radius)];
                if norm(&t) > radius || a.max_abs_projection(&t) < 0.5 {
                    continue;
                }
                probes += 1;
                assert!(m.alpha_star <= a.lattice_dist_at(&t) + 1e-12);
                assert!(m.certified_lower <= a.lattice_dist_at(&t));
            }
        }
    }

    #[test]
    fn margin_nonincreasing_in_radius() {
        let a = CoefficientMatrix::random_sphere(7, 2, 5, 1.0).unwrap();
        let mut prev = f64::INFINITY;
        for radius in [0.6, 0.9, 1.2, 1.8, 2.5] {
            let m = condition_margin(&a, radius, &MarginOptions::default()).unwrap();
            assert!(m.alpha_star <= prev + 1e-9, "{} after {prev}", m.alpha_star);
            prev = m.alpha_star;
        }
    }

    #[test]
    fn gamma_margin_examples() {
        let m = condition_margin_gamma(&CoefficientMatrix::ones(4).unwrap(), 2.0, 0.5, &MarginOptions::default()).unwrap();
        assert!(m.alpha_star <= 1e-10, "{}", m.alpha_star);
        // Small t never binds: the witness is away from the origin.
        assert!(norm(&m.witness_t) >= 0.5 / 2.0);
        assert!(a_dist_lt(&CoefficientMatrix::ones(4).unwrap(), &m.witness_t, 0.5));
    }

    fn a_dist_lt(a: &CoefficientMatrix, t: &[f64], gamma: f64) -> bool {
        a.lattice_dist_at(t) < gamma * a.projection_norm(t)
    }

    #[test]
    fn gamma_margin_golden_ratio_fixture() {
        // a = (1, phi) as two scalar summands in d = 1.
        let a = CoefficientMatrix::scalar(&[1.0, PHI]).unwrap();
        let gamma = 0.5;
        let m = condition_margin_gamma(&a, 20.0, gamma, &MarginOptions::default()).unwrap();
        // Grid oracle at step 1e-4 over |t| <= 20.
        let mut oracle = f64::INFINITY;
        let steps = (20.0 / 1e-4) as i64;
        for i in -steps..=steps {
            let t = [i as f64 * 1e-4];
            if a.max_abs_projection(&t) >= 0.5 && a_dist_lt(&a, &t, gamma) {
                oracle = oracle.min(a.lattice_dist_at(&t));
            }
        }
        assert!(oracle.is_finite());
        assert!(m.alpha_star <= oracle + 1e-12);
        assert!(oracle - m.alpha_star <= 2e-4, "{} vs oracle {oracle}", m.alpha_star);
        assert!(m.certified_lower <= m.alpha_star);
        assert!(a_dist_lt(&a, &m.witness_t, gamma));
    }

    #[test]
    fn lcd_examples() {
        let a = CoefficientMatrix::ones(4).unwrap();
        let r = essential_lcd(&a, 0.5, 0.1, 4.0, &LcdOptions::default()).unwrap();
        assert!(r.feasible_found);
        assert_abs_diff_eq!(r.d_hat, 0.95, epsilon = 1e-4);

        let r = essential_lcd(&a, 0.5, 1.5, 4.0, &LcdOptions::default()).unwrap();
        assert_abs_diff_eq!(r.d_hat, 1.0 / 1.5, epsilon = 1e-6);

        let r = essential_lcd(&a, 0.5, 0.1, 0.5, &LcdOptions::default()).unwrap();
        assert!(!r.feasible_found);
        assert!(r.witness_t.is_empty());
    }

    #[test]
    fn lcd_witness_is_feasible() {
        for seed in 0..3 {
            let a = CoefficientMatrix::random_sphere(5, 2, seed, 2.0).unwrap();
            let gamma = 0.4;
            let alpha = 0.5;
            let r = essential_lcd(&a, gamma, alpha, 6.0, &LcdOptions::default()).unwrap();
            if r.feasible_found {
                let t = &r.witness_t;
                assert!(a.lattice_dist_at(t) <= (gamma * a.projection_norm(t)).min(alpha) + 1e-10);
                assert_abs_diff_eq!(r.d_hat, norm(t), epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn lcd_homogeneity() {
        let a = CoefficientMatrix::scalar(&[1.0, PHI, 2.5]).unwrap();
        let base = essential_lcd(&a, 0.5, 0.3, 10.0, &LcdOptions::default()).unwrap();
        assert!(base.feasible_found);
        for s in [0.5, 2.0, 10.0] {
            let r = essential_lcd(&a.scaled(s), 0.5, 0.3, 10.0 / s, &LcdOptions::default()).unwrap();
            assert!((r.d_hat - base.d_hat / s).abs() <= 1e-6 * base.d_hat / s, "s={s}: {} vs {}", r.d_hat, base.d_hat / s);
        }
        let b = CoefficientMatrix::random_sphere(5, 2, 3, 2.0).unwrap();
        let base = essential_lcd(&b, 0.5, 0.4, 5.0, &LcdOptions::default()).unwrap();
        if base.feasible_found {
            for s in [0.5, 2.0, 10.0] {
                let r = essential_lcd(&b.scaled(s), 0.5, 0.4, 5.0 / s, &LcdOptions::default()).unwrap();
                assert!((r.d_hat - base.d_hat / s).abs() <= 1e-6 * base.d_hat / s, "s={s}: {} vs {}", r.d_hat, base.d_hat / s);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn certified_below_star(seed in 0u64..1000, radius in 0.6f64..3.0) {
            let a = CoefficientMatrix::random_sphere(4, 1, seed, 1.0).unwrap();
            let m = condition_margin(&a, radius, &small()).unwrap();
            if !m.vacuous {
                prop_assert!(m.certified_lower <= m.alpha_star);
                prop_assert!(norm(&m.witness_t) <= radius + 1e-12);
                prop_assert!(a.max_abs_projection(&m.witness_t) >= 0.5 - 1e-12);
            }
        }
    }
}
