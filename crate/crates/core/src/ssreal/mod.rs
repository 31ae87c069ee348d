//! State-space realizations `G(s) = D + C (sI - A)^{-1} B`, Kalman
//! minimalization, pole and zero directions, and PBH tests.

mod directions;
mod zeros;

pub use directions::{
    pbh_uncontrollable, pbh_unobservable, pole_directions, poles, poles_with, subspace_intersect,
    PoleRecord, Subspace,
};
pub use zeros::{invariant_zeros, rosenbrock, zero_directions, InvariantZeros, ZeroRecord};

use nalgebra::DMatrix;

use crate::linalg::{self, CMatrix};
use crate::ratpoly::{Polynomial, RationalFunction, RationalMatrix, DEFAULT_TOL};
use crate::{Error, Result, C64};

/// Real state-space realization with its rank tolerance.
#[derive(Clone, Debug, PartialEq)]
pub struct StateSpace {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    d: DMatrix<f64>,
    tol: f64,
}

impl StateSpace {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, d: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Dimension(format!(
                "A is {}x{}, expected square",
                n,
                a.ncols()
            )));
        }
        if b.nrows() != n {
            return Err(Error::Dimension(format!(
                "B has {} rows, A has {n}",
                b.nrows()
            )));
        }
        if c.ncols() != n {
            return Err(Error::Dimension(format!(
                "C has {} columns, A has {n}",
                c.ncols()
            )));
        }
        if d.shape() != (c.nrows(), b.ncols()) {
            return Err(Error::Dimension(format!(
                "D is {}x{}, expected {}x{}",
                d.nrows(),
                d.ncols(),
                c.nrows(),
                b.ncols()
            )));
        }
        Ok(Self {
            a,
            b,
            c,
            d,
            tol: DEFAULT_TOL,
        })
    }

    pub fn static_gain(d: DMatrix<f64>) -> Self {
        let (p, m) = d.shape();
        Self {
            a: DMatrix::zeros(0, 0),
            b: DMatrix::zeros(0, m),
            c: DMatrix::zeros(p, 0),
            d,
            tol: DEFAULT_TOL,
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn d(&self) -> &DMatrix<f64> {
        &self.d
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }

    /// `max(1, ||A||, ||B||, ||C||, ||D||)`, the scale for rank decisions.
    pub fn scale(&self) -> f64 {
        [&self.a, &self.b, &self.c, &self.d]
            .iter()
            .map(|m| linalg::norm2(*m))
            .fold(1.0, f64::max)
    }

    /// `G(s)`; fails when `s` is an eigenvalue of `A`.
    pub fn eval(&self, s: C64) -> Result<CMatrix> {
        let n = self.order();
        let d = linalg::to_complex(&self.d);
        if n == 0 {
            return Ok(d);
        }
        let si_a = CMatrix::identity(n, n) * s - linalg::to_complex(&self.a);
        let x = linalg::solve(&si_a, &linalg::to_complex(&self.b)).ok_or_else(|| {
            Error::Domain(format!(
                "{} is a pole of the realization",
                linalg::fmt_complex(s)
            ))
        })?;
        Ok(d + linalg::to_complex(&self.c) * x)
    }

    pub fn eigenvalues(&self) -> Vec<C64> {
        linalg::eigenvalues(&self.a)
    }

    /// Largest real part over the spectrum of `A` (−∞ for static systems).
    pub fn spectral_abscissa(&self) -> f64 {
        self.eigenvalues()
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_hurwitz(&self, margin: f64) -> bool {
        self.spectral_abscissa() < -margin
    }

    /// Cascade `next * self`: the output of `self` drives `next`.
    pub fn then(&self, next: &StateSpace) -> Result<StateSpace> {
        if next.inputs() != self.outputs() {
            return Err(Error::Dimension(format!(
                "cascade of a {}-output system into a {}-input system",
                self.outputs(),
                next.inputs()
            )));
        }
        let (n1, n2) = (self.order(), next.order());
        let mut a = DMatrix::zeros(n1 + n2, n1 + n2);
        a.view_mut((0, 0), (n1, n1)).copy_from(&self.a);
        a.view_mut((n1, 0), (n2, n1))
            .copy_from(&(&next.b * &self.c));
        a.view_mut((n1, n1), (n2, n2)).copy_from(&next.a);
        let mut b = DMatrix::zeros(n1 + n2, self.inputs());
        b.view_mut((0, 0), (n1, self.inputs())).copy_from(&self.b);
        b.view_mut((n1, 0), (n2, self.inputs()))
            .copy_from(&(&next.b * &self.d));
        let mut c = DMatrix::zeros(next.outputs(), n1 + n2);
        c.view_mut((0, 0), (next.outputs(), n1))
            .copy_from(&(&next.d * &self.c));
        c.view_mut((0, n1), (next.outputs(), n2)).copy_from(&next.c);
        let d = &next.d * &self.d;
        Ok(StateSpace::new(a, b, c, d)?.with_tol(self.tol))
    }

    /// `self + other` (parallel connection).
    pub fn add(&self, other: &StateSpace) -> Result<StateSpace> {
        if self.d.shape() != other.d.shape() {
            return Err(Error::Dimension(
                "parallel connection of mismatched systems".into(),
            ));
        }
        let a = linalg::block_diag(&[&self.a, &other.a]);
        let b = stack_rows(&self.b, &other.b);
        let c = stack_cols(&self.c, &other.c);
        Ok(StateSpace::new(a, b, c, &self.d + &other.d)?.with_tol(self.tol))
    }

    pub fn neg(&self) -> StateSpace {
        Self {
            c: -&self.c,
            d: -&self.d,
            ..self.clone()
        }
    }

    /// `diag(G1, G2, ...)`.
    pub fn direct_sum(parts: &[StateSpace]) -> StateSpace {
        let blocks = |f: fn(&StateSpace) -> &DMatrix<f64>| -> DMatrix<f64> {
            let refs: Vec<&DMatrix<f64>> = parts.iter().map(f).collect();
            linalg::block_diag(&refs)
        };
        let tol = parts.first().map_or(DEFAULT_TOL, |p| p.tol);
        Self {
            a: blocks(|p| &p.a),
            b: blocks(|p| &p.b),
            c: blocks(|p| &p.c),
            d: blocks(|p| &p.d),
            tol,
        }
    }

    /// `[G1 G2 ...]`, systems sharing the output.
    pub fn hconcat(parts: &[StateSpace]) -> Result<StateSpace> {
        let p = parts.first().map_or(0, StateSpace::outputs);
        if parts.iter().any(|g| g.outputs() != p) {
            return Err(Error::Dimension(
                "horizontal concatenation needs equal output counts".into(),
            ));
        }
        let mut out = Self::direct_sum(parts);
        out.c = parts
            .iter()
            .fold(DMatrix::zeros(p, 0), |acc, g| stack_cols(&acc, &g.c));
        out.d = parts
            .iter()
            .fold(DMatrix::zeros(p, 0), |acc, g| stack_cols(&acc, &g.d));
        Ok(out)
    }

    /// `[G1; G2; ...]`, systems sharing the input.
    pub fn vconcat(parts: &[StateSpace]) -> Result<StateSpace> {
        Ok(
            Self::hconcat(&parts.iter().map(StateSpace::transpose).collect::<Vec<_>>())?
                .transpose(),
        )
    }

    /// Realization of `G(s)^T`.
    pub fn transpose(&self) -> StateSpace {
        Self {
            a: self.a.transpose(),
            b: self.c.transpose(),
            c: self.b.transpose(),
            d: self.d.transpose(),
            tol: self.tol,
        }
    }

    /// Realization of `G(s)^{-1}` for square `G` with invertible `D`.
    pub fn inverse(&self) -> Result<StateSpace> {
        if self.inputs() != self.outputs() {
            return Err(Error::Dimension("inverse of a non-square system".into()));
        }
        let singular = || Error::Domain("feedthrough is singular, inverse is improper".into());
        if self.inputs() > 0
            && linalg::min_singular_value(&self.d) <= self.tol * linalg::norm2(&self.d).max(1.0)
        {
            return Err(singular());
        }
        let di = self.d.clone().try_inverse().ok_or_else(singular)?;
        let a = &self.a - &self.b * &di * &self.c;
        let b = &self.b * &di;
        let c = -(&di * &self.c);
        Ok(StateSpace::new(a, b, c, di)?.with_tol(self.tol))
    }

    /// Restriction to the columns `inputs` and rows `outputs`.
    pub fn select(&self, outputs: &[usize], inputs: &[usize]) -> StateSpace {
        Self {
            a: self.a.clone(),
            b: self.b.select_columns(inputs),
            c: self.c.select_rows(outputs),
            d: self.d.select_rows(outputs).select_columns(inputs),
            tol: self.tol,
        }
    }

    fn project(&self, q: &DMatrix<f64>) -> StateSpace {
        let qt = q.transpose();
        Self {
            a: &qt * &self.a * q,
            b: &qt * &self.b,
            c: &self.c * q,
            d: self.d.clone(),
            tol: self.tol,
        }
    }
}

pub(crate) fn stack_rows(top: &DMatrix<f64>, bottom: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(top.nrows() + bottom.nrows(), top.ncols());
    out.view_mut((0, 0), top.shape()).copy_from(top);
    out.view_mut((top.nrows(), 0), bottom.shape())
        .copy_from(bottom);
    out
}

pub(crate) fn stack_cols(left: &DMatrix<f64>, right: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(left.nrows(), left.ncols() + right.ncols());
    out.view_mut((0, 0), left.shape()).copy_from(left);
    out.view_mut((0, left.ncols()), right.shape())
        .copy_from(right);
    out
}

/// Orthonormal basis of the controllable subspace of `(A, B)`, built by
/// block Arnoldi with full re-orthogonalization.
fn controllable_basis(a: &DMatrix<f64>, b: &DMatrix<f64>, thr: f64) -> DMatrix<f64> {
    let n = a.nrows();
    let mut q = DMatrix::zeros(n, 0);
    let mut block = b.clone();
    while q.ncols() < n && block.ncols() > 0 {
        for _ in 0..2 {
            block -= &q * (q.transpose() * &block);
        }
        let fresh = linalg::orth(&block, 1.0, Some(thr));
        if fresh.ncols() == 0 {
            break;
        }
        block = a * &fresh;
        q = stack_cols(&q, &fresh);
    }
    q
}

/// Removes uncontrollable, then unobservable, modes at the realization's
/// tolerance. The result is controllable and observable.
pub fn minimalize(s: &StateSpace) -> StateSpace {
    if s.order() == 0 {
        return s.clone();
    }
    let thr = s.tol * s.scale();
    let qc = controllable_basis(&s.a, &s.b, thr);
    let ctrb = if qc.ncols() < s.order() {
        s.project(&qc)
    } else {
        s.clone()
    };
    if ctrb.order() == 0 {
        return ctrb;
    }
    let qo = controllable_basis(&ctrb.a.transpose(), &ctrb.c.transpose(), thr);
    if qo.ncols() < ctrb.order() {
        ctrb.project(&qo)
    } else {
        ctrb
    }
}

/// Controllable canonical form of a proper scalar function.
fn realize_scalar(f: &RationalFunction) -> Result<StateSpace> {
    if !f.is_proper() {
        return Err(Error::Domain(format!("{f} is improper")));
    }
    let lead = f.den().leading();
    let den = f.den().scale(1.0 / lead);
    let num = f.num().scale(1.0 / lead);
    let n = den.degree().unwrap();
    let d = if num.degree() == Some(n) {
        num.leading()
    } else {
        0.0
    };
    let rest = &num - &den.scale(d);
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n.saturating_sub(1) {
        a[(i, i + 1)] = 1.0;
    }
    for k in 0..n {
        a[(n - 1, k)] = 0.0 - den.coeffs()[k];
    }
    let mut b = DMatrix::zeros(n, 1);
    if n > 0 {
        b[(n - 1, 0)] = 1.0;
    }
    let c = DMatrix::from_fn(1, n, |_, k| rest.coeffs().get(k).copied().unwrap_or(0.0));
    StateSpace::new(a, b, c, DMatrix::from_element(1, 1, d))
}

/// Minimal realization of a proper rational matrix.
///
/// Each entry is realized in controllable canonical form, the entries are
/// direct-summed into the right rows and columns, and the sum is minimalized.
pub fn realize(g: &RationalMatrix) -> Result<StateSpace> {
    realize_tol(g, DEFAULT_TOL)
}

pub fn realize_tol(g: &RationalMatrix, tol: f64) -> Result<StateSpace> {
    let (p, m) = g.shape();
    if !g.is_proper() {
        let (i, j) = (0..p)
            .flat_map(|i| (0..m).map(move |j| (i, j)))
            .find(|&(i, j)| !g.get(i, j).is_proper())
            .unwrap();
        return Err(Error::Domain(format!(
            "entry ({}, {}) = {} is improper",
            i + 1,
            j + 1,
            g.get(i, j)
        )));
    }
    if p == 1 && m == 1 {
        return Ok(realize_scalar(&g.get(0, 0).simplify(tol))?.with_tol(tol));
    }
    let mut parts = Vec::new();
    let mut d = DMatrix::zeros(p, m);
    for i in 0..p {
        for j in 0..m {
            let f = g.get(i, j).simplify(tol);
            if f.is_zero() {
                continue;
            }
            let s = realize_scalar(&f)?;
            d[(i, j)] = s.d[(0, 0)];
            if s.order() > 0 {
                parts.push((i, j, s));
            }
        }
    }
    let n: usize = parts.iter().map(|(_, _, s)| s.order()).sum();
    let mut a = DMatrix::zeros(n, n);
    let mut b = DMatrix::zeros(n, m);
    let mut c = DMatrix::zeros(p, n);
    let mut off = 0;
    for (i, j, s) in &parts {
        let k = s.order();
        a.view_mut((off, off), (k, k)).copy_from(&s.a);
        b.view_mut((off, *j), (k, 1)).copy_from(&s.b);
        c.view_mut((*i, off), (1, k)).copy_from(&s.c);
        off += k;
    }
    Ok(minimalize(&StateSpace::new(a, b, c, d)?.with_tol(tol)))
}

/// McMillan degree: the order of a minimal realization.
pub fn mcmillan_degree(g: &RationalMatrix) -> Result<usize> {
    Ok(realize(g)?.order())
}

fn charpoly(a: &DMatrix<f64>) -> Polynomial {
    Polynomial::from_roots(&linalg::eigenvalues(a))
}

/// Transfer matrix of a realization, entry by entry.
///
/// Each entry `d + c (sI - A)^{-1} b` is reduced to a minimal SISO
/// realization and converted through
/// `c (sI - A)^{-1} b = det(sI - A + bc) / det(sI - A) - 1`.
pub fn transfer(s: &StateSpace) -> RationalMatrix {
    RationalMatrix::from_fn(s.outputs(), s.inputs(), |i, j| {
        let entry = minimalize(&s.select(&[i], &[j]));
        let d = entry.d[(0, 0)];
        if entry.order() == 0 {
            return RationalFunction::constant(d);
        }
        let den = charpoly(&entry.a);
        let closed = charpoly(&(&entry.a - &entry.b * &entry.c));
        let num = &(&closed - &den) + &den.scale(d);
        RationalFunction::new(num, den)
            .map(|f| f.simplify(s.tol))
            .unwrap_or_else(|_| RationalFunction::constant(d))
    })
}
