//! Numerical laboratory for concentration functions of weighted sums
//! `S_a = sum_k X_k a_k` with i.i.d. scalar `X_k` and coefficient vectors
//! `a_k in R^d`.
//!
//! The crate evaluates the quantities that enter small-ball bounds (`M(tau)`,
//! the Gram matrix `N`, lattice distances, condition margins, the essential
//! least common denominator), estimates `Q(F_a, lambda)` exactly or by Monte
//! Carlo, and checks the bounds against those estimates.

pub mod arith;
pub mod bounds;
pub mod calibrate;
pub mod charfn;
pub mod coeffs;
pub mod concentration;
pub mod error;
pub mod law;
pub mod quadrature;
pub mod rates;
pub mod seed;
pub mod verify;

pub use arith::{condition_margin, condition_margin_gamma, essential_lcd, ConditionMargin, LcdOptions, LcdResult, MarginOptions};
pub use bounds::{
    compare, cor1_bound, cor2_bound, cor2_limit_bound, cor3_bound, cor4_bound, fs_bound, kr_bound, rv_bound,
    siegel_bound, thm1_bound, thm2_bound, BoundInputs, BoundName, BoundReport, CompareInstance, Comparison,
    Component, ConstantsPolicy, EmpiricalMode, Provenance,
};
pub use charfn::{
    ball_integral, cf_h, cf_weighted_sum, esseen_lower, esseen_upper, BallIntegral, CharFn, EsseenEstimate,
    IntegrationMode, IntegrationOptions,
};
pub use coeffs::{check_small_projection_identity, gram, lattice_dist, project, CoefficientMatrix, CoefficientSpec, GramMatrix};
pub use concentration::{
    draw_samples, exact_distribution, exact_q, mc_q, q_ratio_scan, ConcentrationEstimate, ExactDistribution,
    McSample, Method, ScanMethod, ScanRow,
};
pub use error::{Error, Result};
pub use law::{beta, m_of_tau, symmetrize, FiniteLaw, LawSpec, ScalarLaw, SymmetrizedLaw};
pub use rates::{loglog_slope, rate_experiment, Family, RateReport, SlopeFit};
