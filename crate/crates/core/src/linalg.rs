//! Dense numerical kernels shared by the realization and analysis modules.
//!
//! Everything here works on `nalgebra` dynamic matrices. Rank decisions use
//! the threshold `tol * scale` when the caller supplies a scale, and the mixed
//! absolute/relative `tol * max(1, sigma_max)` otherwise.

use nalgebra::{ComplexField, DMatrix, DVector};

use crate::C64;

pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub fn to_complex(a: &DMatrix<f64>) -> CMatrix {
    a.map(|x| C64::new(x, 0.0))
}

pub fn fmt_complex(z: C64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else if z.im > 0.0 {
        format!("{}+{}i", z.re, z.im)
    } else {
        format!("{}-{}i", z.re, -z.im)
    }
}

fn threshold(sigma_max: f64, tol: f64, scale: Option<f64>) -> f64 {
    match scale {
        Some(s) => tol * s,
        None => tol * sigma_max.max(1.0),
    }
}

/// Scalars with a singular value decomposition.
///
/// Decompositions are delegated to `faer`: the bidiagonal SVD shipped with
/// `nalgebra` returns inaccurate factors for some rank-deficient inputs, and
/// every rank decision in the crate rests on these factors.
pub trait Scalar: ComplexField<RealField = f64> + Copy {
    #[doc(hidden)]
    fn svd_impl(a: &DMatrix<Self>, full: bool) -> Svd<Self>;
}

/// `a = u * diag(s) * v^H` with `s` descending.
///
/// The thin form has `u: r x k`, `v: c x k` with `k = min(r, c)`; the full
/// form has square `u` and `v`.
#[derive(Clone, Debug)]
pub struct Svd<T: Scalar> {
    pub u: DMatrix<T>,
    pub s: Vec<f64>,
    pub v: DMatrix<T>,
}

macro_rules! faer_svd {
    ($t:ty) => {
        impl Scalar for $t {
            fn svd_impl(a: &DMatrix<$t>, full: bool) -> Svd<$t> {
                let (r, c) = a.shape();
                let m = faer::Mat::<$t>::from_fn(r, c, |i, j| a[(i, j)]);
                let dec = if full { m.svd() } else { m.thin_svd() }.expect("SVD did not converge");
                let (u, s, v) = (dec.U(), dec.S().column_vector(), dec.V());
                Svd {
                    u: DMatrix::from_fn(u.nrows(), u.ncols(), |i, j| u[(i, j)]),
                    s: (0..s.nrows()).map(|i| ComplexField::real(s[i])).collect(),
                    v: DMatrix::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)]),
                }
            }
        }
    };
}
faer_svd!(f64);
faer_svd!(C64);

/// Thin SVD; empty matrices give empty factors.
pub fn svd<T: Scalar>(a: &DMatrix<T>) -> Svd<T> {
    let (r, c) = a.shape();
    if r == 0 || c == 0 {
        return Svd {
            u: DMatrix::zeros(r, 0),
            s: Vec::new(),
            v: DMatrix::zeros(c, 0),
        };
    }
    T::svd_impl(a, false)
}

/// Full SVD with square `u` and `v`.
pub fn svd_full<T: Scalar>(a: &DMatrix<T>) -> Svd<T> {
    let (r, c) = a.shape();
    if r == 0 || c == 0 {
        return Svd {
            u: DMatrix::identity(r, r),
            s: Vec::new(),
            v: DMatrix::identity(c, c),
        };
    }
    T::svd_impl(a, true)
}

pub fn singular_values<T: Scalar>(a: &DMatrix<T>) -> Vec<f64> {
    svd(a).s
}

/// Numerical rank.
pub fn rank<T: Scalar>(a: &DMatrix<T>, tol: f64, scale: Option<f64>) -> usize {
    let sv = singular_values(a);
    let thr = threshold(sv.first().copied().unwrap_or(0.0), tol, scale);
    sv.iter().filter(|&&s| s > thr).count()
}

/// Orthonormal basis of `ker a` (columns).
pub fn null_space<T: Scalar>(a: &DMatrix<T>, tol: f64, scale: Option<f64>) -> DMatrix<T> {
    let c = a.ncols();
    let dec = svd_full(a);
    let thr = threshold(dec.s.first().copied().unwrap_or(0.0), tol, scale);
    let r = dec.s.iter().filter(|&&s| s > thr).count();
    dec.v.columns(r, c - r).into_owned()
}

/// Orthonormal basis of `ker a^H`, i.e. the left null space.
pub fn left_null_space<T: Scalar>(a: &DMatrix<T>, tol: f64, scale: Option<f64>) -> DMatrix<T> {
    null_space(&a.adjoint(), tol, scale)
}

/// Orthonormal basis of `im a`.
pub fn orth<T: Scalar>(a: &DMatrix<T>, tol: f64, scale: Option<f64>) -> DMatrix<T> {
    let dec = svd(a);
    let thr = threshold(dec.s.first().copied().unwrap_or(0.0), tol, scale);
    let k = dec.s.iter().filter(|&&s| s > thr).count();
    dec.u.columns(0, k).into_owned()
}

/// Smallest singular value, counting the structural zeros of wide matrices.
pub fn min_singular_value<T: Scalar>(a: &DMatrix<T>) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return f64::INFINITY;
    }
    if a.nrows() < a.ncols() {
        return 0.0;
    }
    singular_values(a).last().copied().unwrap_or(0.0)
}

/// Spectral norm.
pub fn norm2<T: Scalar>(a: &DMatrix<T>) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

/// Minimum-norm least-squares solution of `a x = b`, singular values below
/// `rcond * sigma_max` discarded.
pub fn lstsq<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>, rcond: f64) -> DMatrix<T> {
    let dec = svd(a);
    let thr = rcond * dec.s.first().copied().unwrap_or(0.0);
    let mut x = DMatrix::zeros(a.ncols(), b.ncols());
    for (k, &s) in dec.s.iter().enumerate() {
        if s <= thr || s == 0.0 {
            break;
        }
        let uk = dec.u.column(k);
        let coef = uk.adjoint() * b;
        let vk = dec.v.column(k);
        x += (vk * coef).unscale(s);
    }
    x
}

/// Eigenvalues of a real square matrix, computed on a balanced copy.
pub fn eigenvalues(a: &DMatrix<f64>) -> Vec<C64> {
    let n = a.nrows();
    if n == 0 {
        return Vec::new();
    }
    let mut balanced = a.clone();
    nalgebra::linalg::balancing::balance_parlett_reinsch(&mut balanced);
    let m = faer::Mat::<f64>::from_fn(n, n, |i, j| balanced[(i, j)]);
    let mut eigs = m
        .eigenvalues()
        .expect("eigenvalue iteration did not converge");
    // Real input: enforce exact conjugate symmetry.
    for z in eigs.iter_mut() {
        if z.im.abs() <= 1e-14 * z.re.abs().max(1.0) {
            z.im = 0.0;
        }
    }
    eigs
}

/// Groups nearby complex numbers. Returns `(representative, multiplicity)`
/// where the representative is the cluster mean.
///
/// Single-linkage on the absolute distance `tol`.
pub fn cluster(values: &[C64], tol: f64) -> Vec<(C64, usize)> {
    let n = values.len();
    let mut uf = petgraph::unionfind::UnionFind::<usize>::new(n);
    for i in 0..n {
        for j in (i + 1)..n {
            if (values[i] - values[j]).norm() <= tol {
                uf.union(i, j);
            }
        }
    }
    let labels = uf.into_labeling();
    let mut groups: Vec<(usize, C64, usize)> = Vec::new();
    for (i, &lab) in labels.iter().enumerate() {
        match groups.iter_mut().find(|g| g.0 == lab) {
            Some(g) => {
                g.1 += values[i];
                g.2 += 1;
            }
            None => groups.push((lab, values[i], 1)),
        }
    }
    let mut out: Vec<(C64, usize)> = groups
        .into_iter()
        .map(|(_, sum, k)| {
            let mut mean = sum / k as f64;
            if mean.im.abs() <= tol {
                mean.im = 0.0;
            }
            (mean, k)
        })
        .collect();
    out.sort_by(|a, b| {
        a.0.re
            .partial_cmp(&b.0.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(
                a.0.im
                    .partial_cmp(&b.0.im)
                    .unwrap_or(std::cmp::Ordering::Equal),
            )
    });
    out
}

/// Solves `a x = b` for square `a`; `None` when numerically singular.
pub fn solve<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> Option<DMatrix<T>> {
    if a.nrows() == 0 {
        return Some(DMatrix::zeros(0, b.ncols()));
    }
    a.clone().lu().solve(b)
}

/// Block-diagonal stack of rectangular blocks.
pub fn block_diag(blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), b.shape()).copy_from(b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

/// Kronecker product `a ⊗ I_k`.
pub fn kron_identity(a: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    a.kronecker(&DMatrix::identity(k, k))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_space_of_wide_matrix_is_complete() {
        let a = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 1.0]);
        let n = null_space(&a, 1e-10, None);
        assert_eq!(n.ncols(), 2);
        assert!((&a * &n).norm() < 1e-12);
    }

    #[test]
    fn rank_of_empty_and_zero() {
        assert_eq!(rank(&DMatrix::<f64>::zeros(0, 3), 1e-8, None), 0);
        assert_eq!(rank(&DMatrix::<f64>::zeros(2, 3), 1e-8, None), 0);
        assert_eq!(
            null_space(&DMatrix::<f64>::zeros(2, 3), 1e-8, None).ncols(),
            3
        );
    }

    #[test]
    fn cluster_merges_split_double_root() {
        let v = [
            C64::new(-0.5, 1e-8),
            C64::new(-0.5, -1e-8),
            C64::new(-2.0, 0.0),
        ];
        let c = cluster(&v, 1e-6);
        assert_eq!(c.len(), 2);
        assert_eq!(c[0], (C64::new(-2.0, 0.0), 1));
        assert_eq!(c[1].1, 2);
        assert_eq!(c[1].0.im, 0.0);
    }

    #[test]
    fn left_null_of_incidence_is_ones() {
        let e = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, -1.0, -1.0]);
        let w = left_null_space(&e, 1e-10, None);
        assert_eq!(w.ncols(), 1);
        let w0 = w[(0, 0)];
        assert!(w.iter().all(|x| (x - w0).abs() < 1e-12));
    }
}
