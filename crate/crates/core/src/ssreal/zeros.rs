use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{StateSpace, Subspace};
use crate::linalg::{self, CMatrix};
use crate::ratpoly::normal_rank_points;
use crate::tol::Tolerances;
use crate::C64;

/// Rosenbrock system matrix `[A - λI, B; C, D]`.
pub fn rosenbrock(s: &StateSpace, lambda: C64) -> CMatrix {
    let (n, m, p) = (s.order(), s.inputs(), s.outputs());
    let mut r = CMatrix::zeros(n + p, n + m);
    let shifted = linalg::to_complex(s.a()) - CMatrix::identity(n, n) * lambda;
    r.view_mut((0, 0), (n, n)).copy_from(&shifted);
    r.view_mut((0, n), (n, m))
        .copy_from(&linalg::to_complex(s.b()));
    r.view_mut((n, 0), (p, n))
        .copy_from(&linalg::to_complex(s.c()));
    r.view_mut((n, n), (p, m))
        .copy_from(&linalg::to_complex(s.d()));
    r
}

fn pencil_scale(s: &StateSpace, lambda: C64) -> f64 {
    s.scale().max(lambda.norm())
}

/// Zero directions at `λ`: `[0 I] ker R(λ)` (input side) and
/// `[0 I] ker R(λ)^H` (output side).
pub fn zero_directions(s: &StateSpace, lambda: C64, tol: &Tolerances) -> (Subspace, Subspace) {
    let n = s.order();
    let r = rosenbrock(s, lambda);
    let thr = tol.cluster * pencil_scale(s, lambda);
    let right = linalg::null_space(&r, 1.0, Some(thr));
    let left = linalg::left_null_space(&r, 1.0, Some(thr));
    let tail = |k: &CMatrix, len: usize| k.rows(n, len).into_owned();
    (
        Subspace::span(&tail(&right, s.inputs()), tol.rank),
        Subspace::span(&tail(&left, s.outputs()), tol.rank),
    )
}

#[derive(Clone, Debug)]
pub struct ZeroRecord {
    pub lambda: C64,
    pub multiplicity: usize,
    pub in_dirs: Subspace,
    pub out_dirs: Subspace,
}

/// Finite invariant zeros of a realization plus its normal-rank structure.
#[derive(Clone, Debug)]
pub struct InvariantZeros {
    pub zeros: Vec<ZeroRecord>,
    /// Normal rank of the Rosenbrock matrix.
    pub normal_rank: usize,
    /// Zero directions at a generic point; nontrivial exactly when the
    /// pencil is normal-rank deficient on that side.
    pub generic_in: Subspace,
    pub generic_out: Subspace,
}

impl InvariantZeros {
    pub fn rank_deficient(&self) -> bool {
        !self.generic_in.is_trivial() || !self.generic_out.is_trivial()
    }
}

/// Random matrix with orthonormal columns, `rows >= cols`.
fn random_orthonormal(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0));
    g.qr().q().columns(0, cols).into_owned()
}

/// Invariant zeros: points where the Rosenbrock matrix drops below its
/// normal rank.
///
/// The pencil `[A B; C D] - λ diag(I, 0)` is squared down to its normal rank
/// with seeded random orthonormal projections, its finite generalized
/// eigenvalues are found through a shift-and-invert eigenproblem, and every
/// candidate is confirmed by a rank test on the original matrix.
pub fn invariant_zeros(s: &StateSpace, tol: &Tolerances) -> InvariantZeros {
    let (n, m, p) = (s.order(), s.inputs(), s.outputs());
    let radius = 2.0 + s.eigenvalues().iter().fold(0.0f64, |a, z| a.max(z.norm()));
    let normal_rank = normal_rank_points(radius)
        .map(|z| linalg::rank(&rosenbrock(s, z), tol.rank, Some(pencil_scale(s, z))))
        .max()
        .unwrap_or(0);
    let generic = normal_rank_points(radius)
        .next()
        .unwrap_or(C64::new(radius, 0.0));
    let (generic_in, generic_out) = zero_directions(s, generic, tol);

    let mut out = InvariantZeros {
        zeros: Vec::new(),
        normal_rank,
        generic_in,
        generic_out,
    };
    if n == 0 || normal_rank == 0 {
        return out;
    }

    let mut r0 = DMatrix::zeros(n + p, n + m);
    r0.view_mut((0, 0), (n, n)).copy_from(s.a());
    r0.view_mut((0, n), (n, m)).copy_from(s.b());
    r0.view_mut((n, 0), (p, n)).copy_from(s.c());
    r0.view_mut((n, n), (p, m)).copy_from(s.d());
    let mut e = DMatrix::zeros(n + p, n + m);
    e.view_mut((0, 0), (n, n)).fill_with_identity();

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_2e70);
    let (w1, w2) = if normal_rank == n + p && normal_rank == n + m {
        (
            DMatrix::identity(n + p, n + p),
            DMatrix::identity(n + m, n + m),
        )
    } else {
        (
            random_orthonormal(&mut rng, n + p, normal_rank).transpose(),
            random_orthonormal(&mut rng, n + m, normal_rank),
        )
    };
    let r0 = &w1 * r0 * &w2;
    let e = &w1 * e * &w2;

    let scale = s.scale();
    let mut mu = Vec::new();
    for _ in 0..8 {
        let sigma =
            scale * rng.random_range(0.3..1.7) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let shifted = &r0 - &e * sigma;
        if linalg::min_singular_value(&shifted) <= 1e-8 * linalg::norm2(&shifted).max(1.0) {
            continue;
        }
        if let Some(x) = linalg::solve(&shifted, &e) {
            let eigs = linalg::eigenvalues(&x);
            let big = eigs.iter().fold(0.0f64, |a, z| a.max(z.norm()));
            mu = eigs
                .into_iter()
                .filter(|z| z.norm() > 1e-9 * big.max(1.0 / scale))
                .map(|z| C64::new(sigma, 0.0) + z.inv())
                .collect();
            break;
        }
    }

    let confirmed: Vec<C64> = mu
        .into_iter()
        .filter(|&z| {
            let thr = tol.cluster * pencil_scale(s, z);
            linalg::rank(&rosenbrock(s, z), 1.0, Some(thr)) < normal_rank
        })
        .collect();
    for (lambda, multiplicity) in linalg::cluster(&confirmed, tol.cluster) {
        let (in_dirs, out_dirs) = zero_directions(s, lambda, tol);
        out.zeros.push(ZeroRecord {
            lambda,
            multiplicity,
            in_dirs,
            out_dirs,
        });
    }
    out
}
