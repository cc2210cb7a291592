//! One-dimensional laws of `X`, the symmetrization `X1 - X2`, the truncated
//! second moment `M(tau)` and the dyadic shell decomposition used for `beta`.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::{erf, erfc};

use crate::error::{Error, Result};
use crate::quadrature;

/// Positions closer than this are the same atom.
pub const ATOM_MERGE_TOL: f64 = 1e-12;
const PROB_SUM_TOL: f64 = 1e-12;
/// Continuous shells stop once the residual mass near 0 falls below this.
pub const SHELL_RESIDUAL: f64 = 1e-12;
const M_QUAD_TOL: f64 = 1e-10;

/// JSON form of a law: `{"kind": "finite", "atoms": [[x, p], ...]}`,
/// `{"kind": "gaussian", "mean": m, "stddev": s}`, `{"kind": "uniform", "lo": a, "hi": b}`,
/// `{"kind": "rademacher"}`, `{"kind": "lazy-rademacher", "hold_prob": h}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LawSpec {
    Finite { atoms: Vec<(f64, f64)> },
    Gaussian { mean: f64, stddev: f64 },
    Uniform { lo: f64, hi: f64 },
    Rademacher {},
    LazyRademacher { hold_prob: f64 },
    Triangular { half_width: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub at: f64,
    pub prob: f64,
}

/// Finite discrete law with sorted, merged, strictly positive atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteLaw {
    atoms: Vec<Atom>,
}

impl FiniteLaw {
    pub fn new(atoms: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut raw = Vec::new();
        for (at, prob) in atoms {
            if !at.is_finite() || !prob.is_finite() {
                return Err(Error::InvalidLaw(format!("non-finite atom ({at}, {prob})")));
            }
            if prob < 0.0 {
                return Err(Error::InvalidLaw(format!("negative probability {prob} at {at}")));
            }
            raw.push(Atom { at, prob });
        }
        let total: f64 = raw.iter().map(|a| a.prob).sum();
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::InvalidLaw(format!("probabilities sum to {total}, not 1")));
        }
        Ok(Self { atoms: merge_atoms(raw) })
    }

    pub fn point_mass(at: f64) -> Self {
        Self { atoms: vec![Atom { at, prob: 1.0 }] }
    }

    /// Builds from already-normalized atoms (no sum check), merging collisions.
    pub(crate) fn from_atoms_unchecked(atoms: Vec<Atom>) -> Self {
        Self { atoms: merge_atoms(atoms) }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn mass_at(&self, x: f64) -> f64 {
        self.atoms
            .iter()
            .filter(|a| (a.at - x).abs() <= ATOM_MERGE_TOL)
            .map(|a| a.prob)
            .sum()
    }

    /// Law of `X1 - X2` by exact self-convolution.
    pub fn self_difference(&self) -> FiniteLaw {
        let mut out = Vec::with_capacity(self.atoms.len() * self.atoms.len());
        for a in &self.atoms {
            for b in &self.atoms {
                let mut at = a.at - b.at;
                if at.abs() <= ATOM_MERGE_TOL {
                    at = 0.0;
                }
                out.push(Atom { at, prob: a.prob * b.prob });
            }
        }
        FiniteLaw::from_atoms_unchecked(out)
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|a| a.at * a.prob).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.atoms.iter().map(|a| (a.at - m).powi(2) * a.prob).sum()
    }

    /// Largest mass of a closed interval of half-width `radius`.
    pub fn concentration(&self, radius: f64) -> f64 {
        let width = 2.0 * radius + ATOM_MERGE_TOL;
        let mut best = 0.0_f64;
        let mut mass = 0.0;
        let mut hi = 0;
        for lo in 0..self.atoms.len() {
            while hi < self.atoms.len() && self.atoms[hi].at - self.atoms[lo].at <= width {
                mass += self.atoms[hi].prob;
                hi += 1;
            }
            best = best.max(mass);
            mass -= self.atoms[lo].prob;
        }
        best.min(1.0)
    }
}

fn merge_atoms(mut atoms: Vec<Atom>) -> Vec<Atom> {
    atoms.retain(|a| a.prob > 0.0);
    atoms.sort_by(|a, b| a.at.total_cmp(&b.at));
    let mut merged: Vec<Atom> = Vec::with_capacity(atoms.len());
    for atom in atoms {
        match merged.last_mut() {
            Some(last) if (atom.at - last.at).abs() <= ATOM_MERGE_TOL => last.prob += atom.prob,
            _ => merged.push(atom),
        }
    }
    merged
}

/// A one-dimensional law of `X`.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarLaw {
    Finite(FiniteLaw),
    Gaussian { mean: f64, stddev: f64 },
    Uniform { lo: f64, hi: f64 },
    Rademacher,
    LazyRademacher { hold_prob: f64 },
    /// Symmetric triangular law on `[-half_width, half_width]`; the symmetrization of a uniform law.
    Triangular { half_width: f64 },
}

impl TryFrom<LawSpec> for ScalarLaw {
    type Error = Error;

    fn try_from(spec: LawSpec) -> Result<Self> {
        let law = match spec {
            LawSpec::Finite { atoms } => ScalarLaw::Finite(FiniteLaw::new(atoms)?),
            LawSpec::Gaussian { mean, stddev } => ScalarLaw::Gaussian { mean, stddev },
            LawSpec::Uniform { lo, hi } => ScalarLaw::Uniform { lo, hi },
            LawSpec::Rademacher {} => ScalarLaw::Rademacher,
            LawSpec::LazyRademacher { hold_prob } => ScalarLaw::LazyRademacher { hold_prob },
            LawSpec::Triangular { half_width } => ScalarLaw::Triangular { half_width },
        };
        law.validate()?;
        Ok(law)
    }
}

impl From<&ScalarLaw> for LawSpec {
    fn from(law: &ScalarLaw) -> Self {
        match law {
            ScalarLaw::Finite(f) => LawSpec::Finite {
                atoms: f.atoms().iter().map(|a| (a.at, a.prob)).collect(),
            },
            ScalarLaw::Gaussian { mean, stddev } => LawSpec::Gaussian { mean: *mean, stddev: *stddev },
            ScalarLaw::Uniform { lo, hi } => LawSpec::Uniform { lo: *lo, hi: *hi },
            ScalarLaw::Rademacher => LawSpec::Rademacher {},
            ScalarLaw::LazyRademacher { hold_prob } => LawSpec::LazyRademacher { hold_prob: *hold_prob },
            ScalarLaw::Triangular { half_width } => LawSpec::Triangular { half_width: *half_width },
        }
    }
}

impl ScalarLaw {
    pub fn finite(atoms: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        Ok(ScalarLaw::Finite(FiniteLaw::new(atoms)?))
    }

    pub fn point_mass(at: f64) -> Self {
        ScalarLaw::Finite(FiniteLaw::point_mass(at))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidLaw(msg));
        match *self {
            ScalarLaw::Finite(_) | ScalarLaw::Rademacher => Ok(()),
            ScalarLaw::Gaussian { mean, stddev } => {
                if !mean.is_finite() || !(stddev.is_finite() && stddev > 0.0) {
                    return bad(format!("gaussian needs finite mean and stddev > 0, got ({mean}, {stddev})"));
                }
                Ok(())
            }
            ScalarLaw::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return bad(format!("uniform needs lo < hi, got [{lo}, {hi}]"));
                }
                Ok(())
            }
            ScalarLaw::LazyRademacher { hold_prob } => {
                if !(0.0..=1.0).contains(&hold_prob) {
                    return bad(format!("hold probability {hold_prob} outside [0, 1]"));
                }
                Ok(())
            }
            ScalarLaw::Triangular { half_width } => {
                if !(half_width.is_finite() && half_width > 0.0) {
                    return bad(format!("triangular needs half_width > 0, got {half_width}"));
                }
                Ok(())
            }
        }
    }

    pub fn name(&self) -> String {
        match self {
            ScalarLaw::Finite(f) => format!("finite[{}]", f.len()),
            ScalarLaw::Gaussian { mean, stddev } => format!("gaussian({mean},{stddev})"),
            ScalarLaw::Uniform { lo, hi } => format!("uniform({lo},{hi})"),
            ScalarLaw::Rademacher => "rademacher".to_string(),
            ScalarLaw::LazyRademacher { hold_prob } => format!("lazy-rademacher({hold_prob})"),
            ScalarLaw::Triangular { half_width } => format!("triangular({half_width})"),
        }
    }

    /// The exact atoms for discrete kinds.
    pub fn to_finite(&self) -> Option<FiniteLaw> {
        match *self {
            ScalarLaw::Finite(ref f) => Some(f.clone()),
            ScalarLaw::Rademacher => Some(FiniteLaw::from_atoms_unchecked(vec![
                Atom { at: -1.0, prob: 0.5 },
                Atom { at: 1.0, prob: 0.5 },
            ])),
            ScalarLaw::LazyRademacher { hold_prob } => {
                let side = 0.5 * (1.0 - hold_prob);
                Some(FiniteLaw::from_atoms_unchecked(vec![
                    Atom { at: -1.0, prob: side },
                    Atom { at: 0.0, prob: hold_prob },
                    Atom { at: 1.0, prob: side },
                ]))
            }
            _ => None,
        }
    }

    pub fn is_discrete(&self) -> bool {
        self.to_finite().is_some()
    }

    pub fn charfn(&self, t: f64) -> Complex64 {
        if t == 0.0 {
            return Complex64::new(1.0, 0.0);
        }
        match *self {
            ScalarLaw::Finite(ref f) => f
                .atoms()
                .iter()
                .map(|a| Complex64::from_polar(a.prob, a.at * t))
                .sum(),
            ScalarLaw::Rademacher => Complex64::new(t.cos(), 0.0),
            ScalarLaw::LazyRademacher { hold_prob } => {
                Complex64::new(hold_prob + (1.0 - hold_prob) * t.cos(), 0.0)
            }
            ScalarLaw::Gaussian { mean, stddev } => {
                Complex64::from_polar((-0.5 * stddev * stddev * t * t).exp(), mean * t)
            }
            ScalarLaw::Uniform { lo, hi } => {
                // e^{i t c} sin(s t) / (s t) with center c and half-width s.
                let c = 0.5 * (lo + hi);
                let s = 0.5 * (hi - lo);
                Complex64::from_polar(sinc(s * t), c * t)
            }
            ScalarLaw::Triangular { half_width } => {
                let v = sinc(0.5 * half_width * t);
                Complex64::new(v * v, 0.0)
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            ScalarLaw::Finite(ref f) => f.mean(),
            ScalarLaw::Gaussian { mean, .. } => mean,
            ScalarLaw::Uniform { lo, hi } => 0.5 * (lo + hi),
            _ => 0.0,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            ScalarLaw::Finite(ref f) => f.variance(),
            ScalarLaw::Gaussian { stddev, .. } => stddev * stddev,
            ScalarLaw::Uniform { lo, hi } => (hi - lo).powi(2) / 12.0,
            ScalarLaw::Rademacher => 1.0,
            ScalarLaw::LazyRademacher { hold_prob } => 1.0 - hold_prob,
            ScalarLaw::Triangular { half_width } => half_width * half_width / 6.0,
        }
    }

    /// True when `X` and `-X` have the same law.
    pub fn is_symmetric(&self) -> bool {
        match *self {
            ScalarLaw::Finite(ref f) => {
                let atoms = f.atoms();
                let n = atoms.len();
                (0..n).all(|i| {
                    let (a, b) = (atoms[i], atoms[n - 1 - i]);
                    (a.at + b.at).abs() <= ATOM_MERGE_TOL && (a.prob - b.prob).abs() <= 1e-12
                })
            }
            ScalarLaw::Gaussian { mean, .. } => mean == 0.0,
            ScalarLaw::Uniform { lo, hi } => lo == -hi,
            _ => true,
        }
    }

    pub fn sampler(&self) -> Sampler {
        if let Some(f) = self.to_finite() {
            let mut cdf = Vec::with_capacity(f.len());
            let mut acc = 0.0;
            for a in f.atoms() {
                acc += a.prob;
                cdf.push(acc);
            }
            let values = f.atoms().iter().map(|a| a.at).collect();
            return Sampler::Finite { values, cdf };
        }
        match *self {
            ScalarLaw::Gaussian { mean, stddev } => {
                Sampler::Normal(Normal::new(mean, stddev).expect("validated gaussian"))
            }
            ScalarLaw::Uniform { lo, hi } => Sampler::Uniform { lo, hi },
            ScalarLaw::Triangular { half_width } => Sampler::Triangular { half_width },
            _ => unreachable!("discrete kinds handled above"),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.sampler().sample(rng)
    }

    /// `P(|X| <= r)` for the continuous symmetric kinds centered at 0.
    /// `Q(L(X), radius)`: the largest mass on a closed interval of half-width `radius`.
    pub fn concentration(&self, radius: f64) -> f64 {
        if let Some(f) = self.to_finite() {
            return f.concentration(radius);
        }
        match *self {
            ScalarLaw::Gaussian { stddev, .. } => erf(radius / (stddev * std::f64::consts::SQRT_2)),
            ScalarLaw::Uniform { lo, hi } => (2.0 * radius / (hi - lo)).min(1.0),
            ScalarLaw::Triangular { .. } => self.abs_cdf(radius).unwrap_or(1.0),
            _ => unreachable!("finite kinds handled above"),
        }
    }

    fn abs_cdf(&self, r: f64) -> Option<f64> {
        if r <= 0.0 {
            return Some(0.0);
        }
        match *self {
            ScalarLaw::Gaussian { mean, stddev } if mean == 0.0 => {
                Some(erf(r / (stddev * std::f64::consts::SQRT_2)))
            }
            ScalarLaw::Uniform { lo, hi } if lo == -hi => Some((r / hi).min(1.0)),
            ScalarLaw::Triangular { half_width: w } => {
                if r >= w {
                    Some(1.0)
                } else {
                    Some(1.0 - ((w - r) / w).powi(2))
                }
            }
            _ => None,
        }
    }

    /// `P(|X| > r)` without cancellation for small tails.
    fn abs_tail(&self, r: f64) -> Option<f64> {
        match *self {
            ScalarLaw::Gaussian { mean, stddev } if mean == 0.0 => {
                Some(erfc(r / (stddev * std::f64::consts::SQRT_2)))
            }
            _ => self.abs_cdf(r).map(|c| 1.0 - c),
        }
    }

    /// Density of the continuous symmetric kinds centered at 0.
    fn symmetric_density(&self, x: f64) -> Option<f64> {
        match *self {
            ScalarLaw::Gaussian { mean, stddev } if mean == 0.0 => {
                let z = x / stddev;
                Some((-0.5 * z * z).exp() / (stddev * (2.0 * std::f64::consts::PI).sqrt()))
            }
            ScalarLaw::Uniform { lo, hi } if lo == -hi => Some(if x.abs() <= hi { 0.5 / hi } else { 0.0 }),
            ScalarLaw::Triangular { half_width: w } => Some(((w - x.abs()) / (w * w)).max(0.0)),
            _ => None,
        }
    }

    /// Effective support half-width for quadrature of the symmetric continuous kinds.
    fn symmetric_extent(&self) -> Option<f64> {
        match *self {
            ScalarLaw::Gaussian { mean, stddev } if mean == 0.0 => Some(40.0 * stddev),
            ScalarLaw::Uniform { lo, hi } if lo == -hi => Some(hi),
            ScalarLaw::Triangular { half_width } => Some(half_width),
            _ => None,
        }
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Precomputed sampler for a [`ScalarLaw`].
#[derive(Debug, Clone)]
pub enum Sampler {
    Finite { values: Vec<f64>, cdf: Vec<f64> },
    Normal(Normal<f64>),
    Uniform { lo: f64, hi: f64 },
    Triangular { half_width: f64 },
}

impl Sampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Sampler::Finite { values, cdf } => {
                let u: f64 = rng.random::<f64>() * cdf[cdf.len() - 1];
                let idx = cdf.partition_point(|&c| c <= u).min(values.len() - 1);
                values[idx]
            }
            Sampler::Normal(n) => n.sample(rng),
            Sampler::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            Sampler::Triangular { half_width } => {
                half_width * (rng.random::<f64>() - rng.random::<f64>())
            }
        }
    }
}

/// Conditional law of `X~` given that it falls in a shell.
#[derive(Debug, Clone, PartialEq)]
pub enum ShellLaw {
    Atoms(FiniteLaw),
    /// `G` restricted to `inner < |x| <= outer` and renormalized.
    Band { inner: f64, outer: f64 },
}

/// Shell `j = 0` is `{|x| > 1}`, shell `j >= 1` is `{2^-j < |x| <= 2^(1-j)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Shell {
    pub index: u32,
    pub prob: f64,
    pub law: ShellLaw,
}

/// The law `G` of `X~ = X1 - X2` with its atom at zero and dyadic shells.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetrizedLaw {
    base: ScalarLaw,
    q: f64,
    shells: Vec<Shell>,
    beta: f64,
}

/// Index of the dyadic shell containing `|x| > 0`.
pub fn shell_index(x: f64) -> u32 {
    let ax = x.abs();
    if ax > 1.0 {
        return 0;
    }
    let mut j = 1;
    let mut upper = 1.0_f64;
    while ax <= 0.5 * upper {
        upper *= 0.5;
        j += 1;
    }
    j
}

pub fn symmetrize(law: &ScalarLaw) -> Result<SymmetrizedLaw> {
    law.validate()?;
    if let Some(f) = law.to_finite() {
        return Ok(SymmetrizedLaw::from_finite_difference(f.self_difference()));
    }
    let base = match *law {
        ScalarLaw::Gaussian { stddev, .. } => ScalarLaw::Gaussian {
            mean: 0.0,
            stddev: std::f64::consts::SQRT_2 * stddev,
        },
        ScalarLaw::Uniform { lo, hi } => ScalarLaw::Triangular { half_width: hi - lo },
        ScalarLaw::Triangular { .. } => {
            return Err(Error::Unsupported(
                "symmetrizing a triangular law has no closed form here".into(),
            ))
        }
        _ => unreachable!("discrete kinds handled above"),
    };
    Ok(SymmetrizedLaw::from_continuous(base))
}

impl SymmetrizedLaw {
    fn from_finite_difference(g: FiniteLaw) -> Self {
        let q = g.mass_at(0.0);
        let mut shells: Vec<Shell> = Vec::new();
        let mut buckets: std::collections::BTreeMap<u32, Vec<Atom>> = Default::default();
        for a in g.atoms() {
            if a.at == 0.0 {
                continue;
            }
            buckets.entry(shell_index(a.at)).or_default().push(*a);
        }
        for (index, atoms) in buckets {
            let prob: f64 = atoms.iter().map(|a| a.prob).sum();
            let cond = atoms.iter().map(|a| Atom { at: a.at, prob: a.prob / prob }).collect();
            shells.push(Shell { index, prob, law: ShellLaw::Atoms(FiniteLaw::from_atoms_unchecked(cond)) });
        }
        let beta = beta_of(&shells);
        Self { base: ScalarLaw::Finite(g), q, shells, beta }
    }

    fn from_continuous(base: ScalarLaw) -> Self {
        let tail = |r: f64| base.abs_tail(r).expect("symmetric continuous base");
        let mut shells = Vec::new();
        let p0 = tail(1.0);
        if p0 > 0.0 {
            shells.push(Shell {
                index: 0,
                prob: p0,
                law: ShellLaw::Band { inner: 1.0, outer: f64::INFINITY },
            });
        }
        let mut outer = 1.0_f64;
        let mut j = 1;
        loop {
            let inner = 0.5 * outer;
            let residual = 1.0 - tail(inner);
            let prob = (tail(inner) - tail(outer)).max(0.0);
            if prob > 0.0 {
                shells.push(Shell { index: j, prob, law: ShellLaw::Band { inner, outer } });
            }
            if residual < SHELL_RESIDUAL {
                break;
            }
            outer = inner;
            j += 1;
        }
        let beta = beta_of(&shells);
        Self { base, q: 0.0, shells, beta }
    }

    /// The law `G` of `X~`.
    pub fn base(&self) -> &ScalarLaw {
        &self.base
    }

    /// `P(X~ = 0)`.
    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn shells(&self) -> &[Shell] {
        &self.shells
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn nonzero_prob(&self) -> f64 {
        1.0 - self.q
    }

    /// `mu_j = beta_j / beta` for every stored shell.
    pub fn shell_weights(&self) -> Vec<(u32, f64)> {
        self.shells
            .iter()
            .map(|s| (s.index, 4f64.powi(-(s.index as i32)) * s.prob / self.beta))
            .collect()
    }

    pub fn charfn(&self, t: f64) -> f64 {
        self.base.charfn(t).re
    }

    /// `E min{X~^2 / tau^2, 1}`.
    pub fn m_of_tau(&self, tau: f64) -> Result<f64> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::Domain(format!("tau must be positive and finite, got {tau}")));
        }
        if let ScalarLaw::Finite(ref g) = self.base {
            let m: f64 = g
                .atoms()
                .iter()
                .map(|a| a.prob * (a.at * a.at / (tau * tau)).min(1.0))
                .sum();
            return Ok(m.clamp(0.0, 1.0));
        }
        let base = &self.base;
        let extent = base.symmetric_extent().expect("continuous base");
        let upper = tau.min(extent);
        let density = |x: f64| x * x * base.symmetric_density(x).unwrap_or(0.0);
        let inner = 2.0 * quadrature::integrate(density, 0.0, upper, 0.5 * M_QUAD_TOL * tau * tau);
        let tail = base.abs_tail(tau).unwrap_or(0.0);
        Ok((inner / (tau * tau) + tail).clamp(0.0, 1.0))
    }

    /// Largest mass `G` puts on a closed interval of half-width `radius`.
    pub fn concentration(&self, radius: f64) -> f64 {
        match self.base {
            ScalarLaw::Finite(ref g) => g.concentration(radius),
            // Symmetric unimodal: the centered interval is optimal.
            _ => self.base.abs_cdf(radius).unwrap_or(0.0),
        }
    }
}

fn beta_of(shells: &[Shell]) -> f64 {
    shells.iter().map(|s| 4f64.powi(-(s.index as i32)) * s.prob).sum()
}

/// `M(tau)` of a law, computed through its symmetrization.
pub fn m_of_tau(sym: &SymmetrizedLaw, tau: f64) -> Result<f64> {
    sym.m_of_tau(tau)
}

pub fn beta(sym: &SymmetrizedLaw) -> f64 {
    sym.beta()
}

/// A fixed collection of laws covering every supported kind.
pub fn law_zoo() -> Vec<ScalarLaw> {
    vec![
        ScalarLaw::Rademacher,
        ScalarLaw::LazyRademacher { hold_prob: 0.5 },
        ScalarLaw::LazyRademacher { hold_prob: 0.9 },
        ScalarLaw::point_mass(5.0),
        ScalarLaw::finite([(0.0, 0.2), (0.3, 0.5), (2.5, 0.3)]).expect("valid"),
        ScalarLaw::finite([(-0.01, 0.5), (0.01, 0.5)]).expect("valid"),
        ScalarLaw::finite([(0.0, 0.25), (0.125, 0.25), (0.75, 0.25), (4.0, 0.25)]).expect("valid"),
        ScalarLaw::Gaussian { mean: 0.0, stddev: 1.0 },
        ScalarLaw::Gaussian { mean: 3.0, stddev: 0.05 },
        ScalarLaw::Gaussian { mean: -1.0, stddev: 7.0 },
        ScalarLaw::Uniform { lo: -1.0, hi: 1.0 },
        ScalarLaw::Uniform { lo: 0.0, hi: 0.2 },
        ScalarLaw::Uniform { lo: 2.0, hi: 10.0 },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;

    fn rademacher_sym() -> SymmetrizedLaw {
        symmetrize(&ScalarLaw::Rademacher).unwrap()
    }

    #[test]
    fn rademacher_symmetrization() {
        let s = rademacher_sym();
        let ScalarLaw::Finite(ref g) = *s.base() else { panic!("finite expected") };
        let atoms: Vec<(f64, f64)> = g.atoms().iter().map(|a| (a.at, a.prob)).collect();
        assert_eq!(atoms, vec![(-2.0, 0.25), (0.0, 0.5), (2.0, 0.25)]);
        assert_eq!(s.q(), 0.5);
        assert_eq!(s.shells().len(), 1);
        assert_eq!(s.shells()[0].index, 0);
        assert_eq!(s.beta(), 0.5);
    }

    #[test]
    fn point_mass_symmetrizes_to_zero() {
        let s = symmetrize(&ScalarLaw::point_mass(5.0)).unwrap();
        assert_eq!(s.q(), 1.0);
        assert!(s.shells().is_empty());
        assert_eq!(s.beta(), 0.0);
    }

    #[test]
    fn gaussian_symmetrization() {
        let s = symmetrize(&ScalarLaw::Gaussian { mean: 3.0, stddev: 1.0 }).unwrap();
        assert_eq!(*s.base(), ScalarLaw::Gaussian { mean: 0.0, stddev: std::f64::consts::SQRT_2 });
        assert_eq!(s.q(), 0.0);
        let total: f64 = s.q() + s.shells().iter().map(|sh| sh.prob).sum::<f64>();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn uniform_symmetrizes_to_triangular() {
        let s = symmetrize(&ScalarLaw::Uniform { lo: -1.0, hi: 1.0 }).unwrap();
        assert_eq!(*s.base(), ScalarLaw::Triangular { half_width: 2.0 });
        // Shell 0 mass by hand: P(|X~| > 1) = (1/2)^2.
        assert_abs_diff_eq!(s.shells()[0].prob, 0.25, epsilon = 1e-15);
        let total: f64 = s.shells().iter().map(|sh| sh.prob).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn uniform_beta_against_shell_quadrature() {
        let s = symmetrize(&ScalarLaw::Uniform { lo: -1.0, hi: 1.0 }).unwrap();
        // Oracle: integrate the triangular density over each shell independently.
        let dens = |x: f64| ((2.0 - x) / 4.0).max(0.0);
        let mut oracle = 2.0 * quadrature::integrate(dens, 1.0, 2.0, 1e-14);
        for j in 1..60 {
            let outer = 2f64.powi(1 - j);
            let p = 2.0 * quadrature::integrate(dens, 0.5 * outer, outer, 1e-16);
            oracle += 4f64.powi(-j) * p;
        }
        assert_abs_diff_eq!(s.beta(), oracle, epsilon = 1e-12);
        assert!(s.beta() >= s.m_of_tau(1.0).unwrap() / 4.0 - 1e-8);
    }

    #[test]
    fn m_of_tau_rademacher_examples() {
        let s = rademacher_sym();
        assert_eq!(s.m_of_tau(1.0).unwrap(), 0.5);
        assert_eq!(s.m_of_tau(4.0).unwrap(), 0.125);
        assert_abs_diff_eq!(s.m_of_tau(1e-9).unwrap(), 0.5, epsilon = 1e-9);
        assert!(matches!(s.m_of_tau(0.0), Err(Error::Domain(_))));
        assert!(matches!(s.m_of_tau(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn m_of_tau_gaussian_closed_form() {
        // X~ ~ N(0, 2): M(tau) = E min(X~^2/tau^2, 1), closed form via the
        // truncated second moment of a normal.
        let s = symmetrize(&ScalarLaw::Gaussian { mean: 0.0, stddev: 1.0 }).unwrap();
        let sd = std::f64::consts::SQRT_2;
        for &tau in &[0.1, 0.5, 1.0, 2.0, 10.0] {
            let z = tau / sd;
            let phi = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
            let inner = sd * sd * (erf(z / std::f64::consts::SQRT_2) - 2.0 * z * phi);
            let expected = inner / (tau * tau) + erfc(z / std::f64::consts::SQRT_2);
            assert_abs_diff_eq!(s.m_of_tau(tau).unwrap(), expected, epsilon = 1e-10);
        }
    }

    #[test]
    fn triangular_cannot_be_resymmetrized() {
        let s = symmetrize(&ScalarLaw::Uniform { lo: 0.0, hi: 1.0 }).unwrap();
        assert!(matches!(symmetrize(s.base()), Err(Error::Unsupported(_))));
    }

    #[test]
    fn invalid_laws_rejected() {
        assert!(ScalarLaw::finite([(0.0, 0.5), (1.0, 0.4)]).is_err());
        assert!(ScalarLaw::finite([(0.0, -0.5), (1.0, 1.5)]).is_err());
        assert!(ScalarLaw::try_from(LawSpec::Gaussian { mean: 0.0, stddev: 0.0 }).is_err());
        assert!(ScalarLaw::try_from(LawSpec::Uniform { lo: 1.0, hi: 1.0 }).is_err());
        assert!(ScalarLaw::try_from(LawSpec::LazyRademacher { hold_prob: 1.5 }).is_err());
    }

    #[test]
    fn shell_boundaries() {
        assert_eq!(shell_index(1.5), 0);
        assert_eq!(shell_index(1.0), 1);
        assert_eq!(shell_index(0.75), 1);
        assert_eq!(shell_index(0.5), 2);
        assert_eq!(shell_index(0.3), 2);
        assert_eq!(shell_index(0.25), 3);
        assert_eq!(shell_index(-0.3), 2);
    }

    #[test]
    fn spec_json_roundtrip() {
        let spec: LawSpec = serde_json::from_str(r#"{"kind": "finite", "atoms": [[0, 0.5], [1, 0.5]]}"#).unwrap();
        let law = ScalarLaw::try_from(spec.clone()).unwrap();
        assert_eq!(LawSpec::from(&law), spec);
        let spec: LawSpec = serde_json::from_str(r#"{"kind": "lazy-rademacher", "hold_prob": 0.25}"#).unwrap();
        assert_eq!(spec, LawSpec::LazyRademacher { hold_prob: 0.25 });
        assert!(serde_json::from_str::<LawSpec>(r#"{"kind": "rademacher", "extra": 1}"#).is_err());
    }

    #[test]
    fn zoo_shell_invariants() {
        for law in law_zoo() {
            let s = symmetrize(&law).unwrap();
            let total = s.q() + s.shells().iter().map(|sh| sh.prob).sum::<f64>();
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-10);
            let m1 = s.m_of_tau(1.0).unwrap();
            let slack = if law.is_discrete() { 0.0 } else { 1e-8 };
            assert!(s.beta() >= m1 / 4.0 - slack, "{}: beta {} < M(1)/4 {}", law.name(), s.beta(), m1 / 4.0);
            let weights: f64 = s.shell_weights().iter().map(|w| w.1).sum();
            if s.beta() > 0.0 {
                assert_abs_diff_eq!(weights, 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn charfn_at_zero_and_bounded() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for law in law_zoo() {
            assert_eq!(law.charfn(0.0), Complex64::new(1.0, 0.0));
            for _ in 0..200 {
                let t = rng.random_range(-50.0..50.0);
                assert!(law.charfn(t).norm() <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn symmetrized_charfn_is_squared_modulus() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for law in law_zoo() {
            let s = symmetrize(&law).unwrap();
            for _ in 0..100 {
                let t = rng.random_range(-20.0..20.0);
                let expected = law.charfn(t).norm_sqr();
                assert_abs_diff_eq!(s.charfn(t), expected, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn sampler_matches_moments() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for law in law_zoo() {
            let sampler = law.sampler();
            let n = 40_000;
            let xs: Vec<f64> = (0..n).map(|_| sampler.sample(&mut rng)).collect();
            let mean = xs.iter().sum::<f64>() / n as f64;
            let se = (law.variance() / n as f64).sqrt();
            assert!((mean - law.mean()).abs() <= 5.0 * se + 1e-12, "{}", law.name());
        }
    }

    proptest! {
        #[test]
        fn m_of_tau_nonincreasing_and_limit(
            probs in proptest::collection::vec(0.01f64..1.0, 2..6),
            xs in proptest::collection::vec(-3.0f64..3.0, 6),
        ) {
            let total: f64 = probs.iter().sum();
            let atoms: Vec<(f64, f64)> = probs.iter().zip(&xs).map(|(p, x)| (*x, p / total)).collect();
            let Ok(law) = ScalarLaw::finite(atoms) else { return Ok(()) };
            let s = symmetrize(&law).unwrap();
            let mut prev = f64::INFINITY;
            for k in -12..8 {
                let tau = 2f64.powf(k as f64 * 0.7);
                let m = s.m_of_tau(tau).unwrap();
                prop_assert!((0.0..=1.0).contains(&m));
                prop_assert!(m <= prev + 1e-15);
                prev = m;
            }
            let limit = s.m_of_tau(1e-9).unwrap();
            prop_assert!((limit - s.nonzero_prob()).abs() <= 1e-9);
            prop_assert!(s.beta() >= s.m_of_tau(1.0).unwrap() / 4.0);
        }

        #[test]
        fn m_of_tau_right_continuous(x in 0.05f64..3.0) {
            // The kink at tau = |atom| must be approached continuously from the right.
            let law = ScalarLaw::finite([(0.0, 0.5), (x, 0.5)]).unwrap();
            let s = symmetrize(&law).unwrap();
            let at = s.m_of_tau(x).unwrap();
            let right = s.m_of_tau(x * (1.0 + 1e-12)).unwrap();
            prop_assert!((at - right).abs() <= 1e-10);
        }
    }
}
