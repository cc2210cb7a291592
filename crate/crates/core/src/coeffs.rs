//! The coefficient multivector `a = (a_1, ..., a_n)`, `a_k` in `R^d`, its Gram
//! matrix and the lattice-distance functionals of `t . a`.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientMatrix {
    n: usize,
    d: usize,
    data: Vec<f64>,
}

/// JSON form of the coefficients: explicit rows or a generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoefficientSpec {
    Rows(RowsSpec),
    Generated(GeneratorSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RowsSpec {
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GeneratorSpec {
    /// `a_k = 1`, `d = 1`.
    Ones { n: usize },
    /// `a_k = k`, `d = 1`.
    Arith { n: usize },
    /// Rows uniform on the sphere of the given radius in `R^d`.
    RandomSphere {
        n: usize,
        d: usize,
        seed: u64,
        #[serde(default = "unit")]
        radius: f64,
    },
}

fn unit() -> f64 {
    1.0
}

impl TryFrom<&CoefficientSpec> for CoefficientMatrix {
    type Error = Error;

    fn try_from(spec: &CoefficientSpec) -> Result<Self> {
        match spec {
            CoefficientSpec::Rows(r) => CoefficientMatrix::from_rows(&r.rows),
            CoefficientSpec::Generated(GeneratorSpec::Ones { n }) => CoefficientMatrix::ones(*n),
            CoefficientSpec::Generated(GeneratorSpec::Arith { n }) => CoefficientMatrix::arith(*n),
            CoefficientSpec::Generated(GeneratorSpec::RandomSphere { n, d, seed, radius }) => {
                CoefficientMatrix::random_sphere(*n, *d, *seed, *radius)
            }
        }
    }
}

impl CoefficientMatrix {
    pub fn new(n: usize, d: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 || d == 0 {
            return domain(format!("need n >= 1 and d >= 1, got n = {n}, d = {d}"));
        }
        if data.len() != n * d {
            return domain(format!("expected {} entries for {n}x{d}, got {}", n * d, data.len()));
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return domain(format!("non-finite coefficient in row {}", pos / d));
        }
        Ok(Self { n, d, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let Some(first) = rows.first() else {
            return domain("coefficient matrix needs at least one row");
        };
        let d = first.as_ref().len();
        let mut data = Vec::with_capacity(rows.len() * d);
        for (k, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != d {
                return domain(format!("row {k} has length {}, expected {d}", row.len()));
            }
            data.extend_from_slice(row);
        }
        Self::new(rows.len(), d, data)
    }

    /// One-dimensional coefficients `(a_1, ..., a_n)`.
    pub fn scalar(values: &[f64]) -> Result<Self> {
        Self::new(values.len(), 1, values.to_vec())
    }

    pub fn ones(n: usize) -> Result<Self> {
        Self::new(n, 1, vec![1.0; n])
    }

    pub fn arith(n: usize) -> Result<Self> {
        Self::new(n, 1, (1..=n).map(|k| k as f64).collect())
    }

    pub fn identity(d: usize) -> Result<Self> {
        let mut data = vec![0.0; d * d];
        for i in 0..d {
            data[i * d + i] = 1.0;
        }
        Self::new(d, d, data)
    }

    pub fn random_sphere(n: usize, d: usize, seed: u64, radius: f64) -> Result<Self> {
        let mut rng = seed::rng_for(seed, 0);
        let mut data = Vec::with_capacity(n * d);
        for _ in 0..n {
            loop {
                let v: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 1e-12 {
                    data.extend(v.iter().map(|x| radius * x / norm));
                    break;
                }
            }
        }
        Self::new(n, d, data)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.data[k * self.d..(k + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.d)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { n: self.n, d: self.d, data: self.data.iter().map(|x| x * s).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0.0)
    }

    pub fn max_row_norm(&self) -> f64 {
        self.rows().map(norm).fold(0.0, f64::max)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(|r| r.to_vec()).collect()
    }

    /// `t . a = (<t, a_1>, ..., <t, a_n>)`.
    pub fn project(&self, t: &[f64]) -> Result<Vec<f64>> {
        if t.len() != self.d {
            return domain(format!("t has length {}, expected d = {}", t.len(), self.d));
        }
        Ok(self.project_unchecked(t))
    }

    pub(crate) fn project_unchecked(&self, t: &[f64]) -> Vec<f64> {
        self.rows().map(|r| dot(r, t)).collect()
    }

    /// `dist(t . a, Z^n)` without allocating.
    pub(crate) fn lattice_dist_at(&self, t: &[f64]) -> f64 {
        self.rows()
            .map(|r| {
                let v = dot(r, t);
                let e = v - v.round_ties_even();
                e * e
            })
            .sum::<f64>()
            .sqrt()
    }

    /// `max_k |<t, a_k>|`.
    pub(crate) fn max_abs_projection(&self, t: &[f64]) -> f64 {
        self.rows().map(|r| dot(r, t).abs()).fold(0.0, f64::max)
    }

    pub(crate) fn projection_norm(&self, t: &[f64]) -> f64 {
        self.rows().map(|r| dot(r, t).powi(2)).sum::<f64>().sqrt()
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `N = sum_k a_k a_k^T` with its determinant and spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    pub matrix: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
    pub determinant: f64,
    pub lambda_max: f64,
}

impl GramMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `<N t, t>`.
    pub fn quadratic_form(&self, t: &[f64]) -> f64 {
        let d = self.dim();
        let mut acc = 0.0;
        for i in 0..d {
            for j in 0..d {
                acc += self.matrix[(i, j)] * t[i] * t[j];
            }
        }
        acc
    }

    /// Lipschitz constant of `t -> dist(t . a, Z^n)`.
    pub fn lipschitz(&self) -> f64 {
        self.lambda_max.sqrt()
    }
}

pub fn gram(a: &CoefficientMatrix) -> GramMatrix {
    let d = a.d();
    let mut matrix = DMatrix::<f64>::zeros(d, d);
    for row in a.rows() {
        for i in 0..d {
            for j in 0..d {
                matrix[(i, j)] += row[i] * row[j];
            }
        }
    }
    let eig = SymmetricEigen::new(matrix.clone());
    let raw: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let lambda_max = raw.iter().copied().fold(0.0, f64::max);
    // N is PSD by construction; eigenvalues this close to zero are rounding noise.
    let floor = 1e-12 * lambda_max;
    let eigenvalues: Vec<f64> = raw.iter().map(|&e| if e <= floor { 0.0 } else { e }).collect();
    let determinant = eigenvalues.iter().product();
    GramMatrix { matrix, eigenvalues, determinant, lambda_max }
}

pub fn project(a: &CoefficientMatrix, t: &[f64]) -> Result<Vec<f64>> {
    a.project(t)
}

/// Euclidean distance from `v` to the nearest point of `Z^n` (ties round to even).
pub fn lattice_dist(v: &[f64]) -> f64 {
    v.iter()
        .map(|x| {
            let e = x - x.round_ties_even();
            e * e
        })
        .sum::<f64>()
        .sqrt()
}

/// Both sides of `dist(t . a, Z^n)^2 = sum_k <t, a_k>^2`, valid when every
/// `|<t, a_k>| <= 1/2`.
pub fn check_small_projection_identity(a: &CoefficientMatrix, t: &[f64]) -> Result<(f64, f64)> {
    let v = a.project(t)?;
    if let Some((k, x)) = v.iter().enumerate().find(|(_, x)| x.abs() > 0.5) {
        return Err(Error::Domain(format!("|<t, a_{k}>| = {} exceeds 1/2", x.abs())));
    }
    let lhs = lattice_dist(&v).powi(2);
    let rhs = v.iter().map(|x| x * x).sum();
    Ok((lhs, rhs))
}
