use nalgebra::DMatrix;

use super::{minimalize, StateSpace};
use crate::linalg::{self, CMatrix, CVector};
use crate::tol::Tolerances;
use crate::{Error, Result, C64};

/// Complex subspace held as an orthonormal basis.
///
/// `tol` is the angle tolerance used when the subspace takes part in
/// intersections and comparisons.
#[derive(Clone, Debug, PartialEq)]
pub struct Subspace {
    basis: CMatrix,
    tol: f64,
}

impl Subspace {
    pub fn trivial(ambient: usize, tol: f64) -> Self {
        Self {
            basis: CMatrix::zeros(ambient, 0),
            tol,
        }
    }

    pub fn full(ambient: usize, tol: f64) -> Self {
        Self {
            basis: CMatrix::identity(ambient, ambient),
            tol,
        }
    }

    /// Span of the columns of `m`; directions with singular value below
    /// `tol * max(1, ||m||)` are dropped.
    pub fn span(m: &CMatrix, tol: f64) -> Self {
        Self {
            basis: linalg::orth(m, tol, None),
            tol,
        }
    }

    pub fn span_real(m: &DMatrix<f64>, tol: f64) -> Self {
        Self::span(&linalg::to_complex(m), tol)
    }

    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn ambient(&self) -> usize {
        self.basis.nrows()
    }

    pub fn is_trivial(&self) -> bool {
        self.dim() == 0
    }

    pub fn projector(&self) -> CMatrix {
        &self.basis * self.basis.adjoint()
    }

    /// `||(I - P_other) Q_self||`: zero iff `self ⊆ other`.
    pub fn residual_in(&self, other: &Subspace) -> f64 {
        if self.is_trivial() {
            return 0.0;
        }
        let r = &self.basis - other.projector() * &self.basis;
        linalg::norm2(&r)
    }

    /// Distance of `v` from the subspace, relative to `||v||`.
    pub fn distance(&self, v: &CVector) -> f64 {
        let nv = v.norm();
        if nv == 0.0 {
            return 0.0;
        }
        (v - self.projector() * v).norm() / nv
    }

    /// Equality as subspaces: same dimension and mutual containment below `tol`.
    pub fn approx_eq(&self, other: &Subspace, tol: f64) -> bool {
        self.ambient() == other.ambient()
            && self.dim() == other.dim()
            && self.residual_in(other) < tol
            && other.residual_in(self) < tol
    }

    pub fn intersect(&self, other: &Subspace) -> Result<Subspace> {
        subspace_intersect(&[self.clone(), other.clone()])
    }

    /// First basis vector with its largest entry rotated to be real and
    /// positive, so that real subspaces yield real representatives.
    pub fn representative(&self) -> Option<CVector> {
        if self.is_trivial() {
            return None;
        }
        let v = self.basis.column(0).into_owned();
        let pivot = v
            .iter()
            .copied()
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
            .unwrap();
        let phase = pivot.conj() / pivot.norm();
        let mut out = v * phase;
        for z in out.iter_mut() {
            if z.im.abs() <= 1e-12 {
                z.im = 0.0;
            }
        }
        Some(out)
    }
}

/// Intersection of subspaces of a common ambient space, as the null space of
/// the stacked complement projectors `I - P_i`.
pub fn subspace_intersect(spaces: &[Subspace]) -> Result<Subspace> {
    let first = spaces
        .first()
        .ok_or_else(|| Error::Dimension("intersection of an empty list of subspaces".into()))?;
    let n = first.ambient();
    if let Some(bad) = spaces.iter().find(|s| s.ambient() != n) {
        return Err(Error::Dimension(format!(
            "subspaces live in dimensions {n} and {}",
            bad.ambient()
        )));
    }
    let tol = spaces.iter().map(|s| s.tol).fold(0.0, f64::max);
    if spaces.iter().any(Subspace::is_trivial) {
        return Ok(Subspace::trivial(n, tol));
    }
    let mut stacked = CMatrix::zeros(n * spaces.len(), n);
    for (k, s) in spaces.iter().enumerate() {
        let comp = CMatrix::identity(n, n) - s.projector();
        stacked.view_mut((k * n, 0), (n, n)).copy_from(&comp);
    }
    Ok(Subspace {
        basis: linalg::null_space(&stacked, tol, Some(1.0)),
        tol,
    })
}

/// Distinct pole of a realization with its input and output directions.
#[derive(Clone, Debug)]
pub struct PoleRecord {
    pub lambda: C64,
    pub multiplicity: usize,
    pub in_dirs: Subspace,
    pub out_dirs: Subspace,
}

/// Basis of `ker m`, keeping at least one vector: `m` is known to be
/// singular, so the smallest singular direction always belongs.
fn eigen_kernel(m: &CMatrix, thr: f64) -> CMatrix {
    let k = linalg::null_space(m, 1.0, Some(thr));
    if k.ncols() > 0 {
        return k;
    }
    linalg::null_space(m, 1.0, Some(linalg::min_singular_value(m) * (1.0 + 1e-12)))
}

fn shifted(a: &DMatrix<f64>, lambda: C64) -> CMatrix {
    let n = a.nrows();
    CMatrix::identity(n, n) * lambda - linalg::to_complex(a)
}

/// `(B^H ker (λI - A)^H, C ker (λI - A))` for an eigenvalue `λ` of a minimal
/// realization.
fn directions_at(s: &StateSpace, lambda: C64, tol: &Tolerances) -> (Subspace, Subspace) {
    let thr = tol.cluster * linalg::norm2(s.a()).max(1.0);
    let shifted = shifted(s.a(), lambda);
    let right = eigen_kernel(&shifted, thr);
    let left = eigen_kernel(&shifted.adjoint(), thr);
    let b = linalg::to_complex(s.b());
    let c = linalg::to_complex(s.c());
    (
        Subspace::span(&(b.adjoint() * left), tol.rank),
        Subspace::span(&(c * right), tol.rank),
    )
}

pub fn poles(s: &StateSpace) -> Vec<PoleRecord> {
    poles_with(s, &Tolerances::with_rank(s.tol()))
}

/// Distinct poles of the minimal part of `s`, eigenvalues within
/// `tol.cluster` merged, sorted by real then imaginary part.
pub fn poles_with(s: &StateSpace, tol: &Tolerances) -> Vec<PoleRecord> {
    let m = minimalize(s);
    let eigs = m.eigenvalues();
    linalg::cluster(&eigs, tol.cluster)
        .into_iter()
        .map(|(lambda, multiplicity)| {
            let (in_dirs, out_dirs) = directions_at(&m, lambda, tol);
            PoleRecord {
                lambda,
                multiplicity,
                in_dirs,
                out_dirs,
            }
        })
        .collect()
}

/// Pole directions at an arbitrary `λ`; both are trivial unless `λ` is
/// within `tol.cluster` of a pole of the minimal part of `s`.
pub fn pole_directions(s: &StateSpace, lambda: C64, tol: &Tolerances) -> (Subspace, Subspace) {
    let m = minimalize(s);
    let trivial = (
        Subspace::trivial(m.inputs(), tol.rank),
        Subspace::trivial(m.outputs(), tol.rank),
    );
    match m
        .eigenvalues()
        .into_iter()
        .min_by(|a, b| (a - lambda).norm().total_cmp(&(b - lambda).norm()))
    {
        Some(z) if (z - lambda).norm() <= tol.cluster => directions_at(&m, lambda, tol),
        _ => trivial,
    }
}

/// PBH controllability test at `λ`: returns whether `[A - λI, B]` loses rank
/// together with its left null space `{η : η^H [A - λI, B] = 0}`.
pub fn pbh_uncontrollable(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    lambda: C64,
    tol: f64,
) -> (bool, Subspace) {
    let mut pencil = CMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    pencil
        .view_mut((0, 0), a.shape())
        .copy_from(&(-shifted(a, lambda)));
    pencil
        .view_mut((0, a.ncols()), b.shape())
        .copy_from(&linalg::to_complex(b));
    let scale = linalg::norm2(&pencil).max(1.0);
    let left = linalg::left_null_space(&pencil, tol, Some(scale));
    (left.ncols() > 0, Subspace { basis: left, tol })
}

/// Dual PBH test: whether `[A - λI; C]` loses rank, with its right null space.
pub fn pbh_unobservable(
    a: &DMatrix<f64>,
    c: &DMatrix<f64>,
    lambda: C64,
    tol: f64,
) -> (bool, Subspace) {
    // (A^T, C^T) at conj(λ): the left null space of the transposed pencil is
    // exactly the right null space of [A - λI; C].
    pbh_uncontrollable(&a.transpose(), &c.transpose(), lambda.conj(), tol)
}
