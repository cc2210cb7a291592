//! Fixed instances shared by the benchmarks.

use acl_core::{CoefficientMatrix, ScalarLaw};

/// `(label, law, coefficients, lambda)` for the one-dimensional exact kernels.
pub fn exact_instances() -> Vec<(&'static str, ScalarLaw, CoefficientMatrix, f64)> {
    vec![
        ("rademacher/ones(1024)", ScalarLaw::Rademacher, CoefficientMatrix::ones(1024).unwrap(), 0.5),
        ("rademacher/arith(128)", ScalarLaw::Rademacher, CoefficientMatrix::arith(128).unwrap(), 0.5),
        (
            "lazy/sphere(12,1)",
            ScalarLaw::LazyRademacher { hold_prob: 0.25 },
            CoefficientMatrix::random_sphere(12, 1, 5, 1.0).unwrap(),
            0.25,
        ),
    ]
}

pub fn sphere(n: usize, d: usize) -> CoefficientMatrix {
    CoefficientMatrix::random_sphere(n, d, 0xBE7C, 1.0).unwrap()
}
