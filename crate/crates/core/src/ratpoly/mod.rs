//! Polynomial and rational-function algebra with tolerance-aware
//! simplification. Coefficients are real and stored in ascending powers of `s`.

mod matrix;
mod poly;
mod rational;

pub(crate) use matrix::normal_rank_points;
pub use matrix::RationalMatrix;
pub use poly::{poly_gcd, poly_roots, Polynomial};
pub use rational::RationalFunction;

/// Rank/GCD threshold used when the caller does not supply one.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Canonical form of `f` at tolerance `tol`.
pub fn rf_simplify(f: &RationalFunction, tol: f64) -> RationalFunction {
    f.simplify(tol)
}

/// Normal rank of a rational matrix.
pub fn rm_normal_rank(g: &RationalMatrix, tol: f64) -> usize {
    g.normal_rank(tol)
}
