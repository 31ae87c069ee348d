#![allow(dead_code)]

use diffstab_core::linalg::CVector;
use diffstab_core::ratpoly::{RationalFunction, RationalMatrix};
use diffstab_core::ssreal::StateSpace;
use diffstab_core::C64;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rf(num: &[f64], den: &[f64]) -> RationalFunction {
    RationalFunction::from_coeffs(num, den).unwrap()
}

pub fn rm(rows: usize, cols: usize, entries: Vec<RationalFunction>) -> RationalMatrix {
    RationalMatrix::new(rows, cols, entries).unwrap()
}

pub fn integrator() -> RationalFunction {
    rf(&[1.0], &[0.0, 1.0])
}

pub fn zero() -> RationalFunction {
    RationalFunction::zero()
}

pub fn one() -> RationalFunction {
    RationalFunction::one()
}

/// `s / (s + 1)`
pub fn washout() -> RationalFunction {
    rf(&[0.0, 1.0], &[1.0, 1.0])
}

/// `diag(1/s, 1)` and `[1; α] (1/s) [1 β]`.
pub fn alpha_beta_agents(alpha: f64, beta: f64) -> Vec<RationalMatrix> {
    let p1 = rm(2, 2, vec![integrator(), zero(), zero(), one()]);
    let p2 = rm(
        2,
        2,
        vec![
            integrator(),
            integrator().scale(beta),
            integrator().scale(alpha),
            integrator().scale(alpha * beta),
        ],
    );
    vec![p1, p2]
}

/// The second-order pair whose input directions at 0 agree and output
/// directions do not.
pub fn asymmetric_agents() -> Vec<RationalMatrix> {
    let p1 = rm(2, 2, vec![washout(), zero(), integrator(), one()]);
    let p2 = rm(2, 2, vec![integrator(), zero(), one(), washout()]);
    vec![p1, p2]
}

pub fn e(k: usize, n: usize) -> CVector {
    let mut v = CVector::zeros(n);
    v[k] = C64::new(1.0, 0.0);
    v
}

pub fn cvec(x: &[f64]) -> CVector {
    CVector::from_iterator(x.len(), x.iter().map(|&r| C64::new(r, 0.0)))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
}

/// Random realization of order `n`, shifted so that it has poles on both
/// sides of the imaginary axis.
pub fn random_system(rng: &mut ChaCha8Rng, n: usize, m: usize, p: usize) -> StateSpace {
    let a = random_matrix(rng, n, n) * 1.5;
    StateSpace::new(
        a,
        random_matrix(rng, n, m),
        random_matrix(rng, p, n),
        random_matrix(rng, p, m),
    )
    .unwrap()
}

/// Sample points away from the real axis and from small poles.
pub fn sample_points(k: usize) -> Vec<C64> {
    (0..k)
        .map(|i| C64::from_polar(1.3 + 0.37 * i as f64, 0.45 + 2.1 * i as f64))
        .collect()
}

/// Whether `f(λ + ε)` blows up like a pole as `ε → 0`.
pub fn blows_up(f: impl Fn(C64) -> f64, lambda: C64) -> bool {
    let dir = C64::from_polar(1.0, 0.7);
    let a = f(lambda + dir * 1e-4);
    let b = f(lambda + dir * 1e-7);
    b > 30.0 * a.max(1e-300)
}

/// Random graph on `nu` vertices with `mu` edges (parallel edges allowed).
pub fn random_graph(rng: &mut ChaCha8Rng, nu: usize, mu: usize) -> diffstab_core::graphnet::Graph {
    let edges: Vec<(usize, usize)> = (0..mu)
        .map(|_| {
            let h = rng.random_range(1..=nu);
            let mut t = rng.random_range(1..nu);
            if t >= h {
                t += 1;
            }
            (h, t)
        })
        .collect();
    diffstab_core::graphnet::Graph::new(nu, &edges).unwrap()
}

/// Whether `g` matches `num/den` (ascending coefficients) at sample points.
pub fn tf_matches(g: &RationalFunction, num: &[f64], den: &[f64], tol: f64) -> bool {
    let want = rf(num, den);
    sample_points(8)
        .into_iter()
        .all(|z| (g.eval(z) - want.eval(z)).norm() <= tol * want.eval(z).norm().max(1.0))
}

/// Ascending coefficients of `prod (s - r)`.
pub fn poly_from_roots(roots: &[f64]) -> Vec<f64> {
    let mut c = vec![1.0];
    for &r in roots {
        let mut next = vec![0.0; c.len() + 1];
        for (k, &v) in c.iter().enumerate() {
            next[k + 1] += v;
            next[k] -= r * v;
        }
        c = next;
    }
    c
}

/// Deterministic proptest settings: fixed seed, no regression files.
pub fn prop_config(cases: u32) -> proptest::test_runner::Config {
    proptest::test_runner::Config {
        cases,
        rng_seed: proptest::test_runner::RngSeed::Fixed(0x5eed),
        failure_persistence: None,
        ..Default::default()
    }
}
