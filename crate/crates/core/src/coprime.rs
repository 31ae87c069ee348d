//! Doubly-coprime factorizations over H∞ and the denominator-kernel tests.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::ssreal::{pbh_uncontrollable, pbh_unobservable, StateSpace, Subspace};
use crate::tol::Tolerances;
use crate::C64;

/// `P = N M^{-1} = M̃^{-1} Ñ` with Bézout partners `X M + Y N = I`,
/// `M̃ X̃ + Ñ Ỹ = I`. All eight factors are stable.
#[derive(Clone, Debug)]
pub struct CoprimeFactors {
    pub m: StateSpace,
    pub n: StateSpace,
    pub m_tilde: StateSpace,
    pub n_tilde: StateSpace,
    pub x: StateSpace,
    pub y: StateSpace,
    pub x_tilde: StateSpace,
    pub y_tilde: StateSpace,
    pub source: StateSpace,
    /// State feedback with `A + B F` Hurwitz.
    pub f: DMatrix<f64>,
    /// Output injection with `A + L C` Hurwitz.
    pub l: DMatrix<f64>,
}

fn log_abs_det(lu: &nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>) -> f64 {
    lu.u().diagonal().iter().map(|d| d.abs().ln()).sum()
}

/// Matrix sign function by the scaled Newton iteration.
fn matrix_sign(h: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let k = h.nrows();
    let mut z = h.clone();
    for _ in 0..100 {
        let lu = z.clone().lu();
        let inv = lu.try_inverse().ok_or_else(|| {
            Error::Numerical("Hamiltonian has eigenvalues on the imaginary axis".into())
        })?;
        let lu = z.clone().lu();
        let c = (log_abs_det(&lu) / k as f64).exp();
        let c = if c.is_finite() && c > 0.0 { c } else { 1.0 };
        let next = (&z / c + inv * c) * 0.5;
        let delta = (&next - &z).norm();
        z = next;
        if delta <= 1e-13 * z.norm() {
            return Ok(z);
        }
    }
    Err(Error::Numerical(
        "matrix sign iteration did not converge".into(),
    ))
}

/// Stabilizing solution of `A^T X + X A - X B B^T X + I = 0`.
pub fn care(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let mut h = DMatrix::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(a);
    h.view_mut((0, n), (n, n))
        .copy_from(&(-(b * b.transpose())));
    h.view_mut((n, 0), (n, n)).fill_with_identity();
    h.view_mut((n, 0), (n, n)).neg_mut();
    h.view_mut((n, n), (n, n)).copy_from(&(-a.transpose()));
    let w = matrix_sign(&h)?;

    // W [I; X] = -[I; X]
    let mut lhs = DMatrix::zeros(2 * n, n);
    lhs.view_mut((0, 0), (n, n))
        .copy_from(&w.view((0, n), (n, n)));
    lhs.view_mut((n, 0), (n, n))
        .copy_from(&(w.view((n, n), (n, n)) + DMatrix::identity(n, n)));
    let mut rhs = DMatrix::zeros(2 * n, n);
    rhs.view_mut((0, 0), (n, n))
        .copy_from(&(-(w.view((0, 0), (n, n)) + DMatrix::identity(n, n))));
    rhs.view_mut((n, 0), (n, n))
        .copy_from(&(-w.view((n, 0), (n, n))));
    let x = linalg::lstsq(&lhs, &rhs, 1e-14);
    let x = (&x + x.transpose()) * 0.5;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("Riccati solution is not finite".into()));
    }
    Ok(x)
}

/// Rejects closed right-half-plane modes that feedback cannot reach.
fn check_assumption(s: &StateSpace, tol: &Tolerances) -> Result<()> {
    let thr = tol.cluster;
    for (lambda, _) in linalg::cluster(&s.eigenvalues(), tol.cluster) {
        if !tol.in_closed_rhp(lambda) {
            continue;
        }
        if pbh_uncontrollable(s.a(), s.b(), lambda, thr).0 {
            return Err(Error::Assumption {
                agent: None,
                lambda,
                detail: "not stabilizable".into(),
            });
        }
        if pbh_unobservable(s.a(), s.c(), lambda, thr).0 {
            return Err(Error::Assumption {
                agent: None,
                lambda,
                detail: "not detectable".into(),
            });
        }
    }
    Ok(())
}

fn ss(a: &DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, d: DMatrix<f64>, tol: f64) -> StateSpace {
    StateSpace::new(a.clone(), b, c, d)
        .expect("consistent factor dimensions")
        .with_tol(tol)
}

/// Doubly-coprime factorization from Riccati-based `F` and `L`.
///
/// A Hurwitz `A` takes `F = 0`, `L = 0`, so that `M = I`.
pub fn factorize(s: &StateSpace, tol: &Tolerances) -> Result<CoprimeFactors> {
    check_assumption(s, tol)?;
    let (a, b, c, d) = (s.a(), s.b(), s.c(), s.d());
    let (n, m, p) = (s.order(), s.inputs(), s.outputs());

    let (f, l) = if s.is_hurwitz(tol.hurwitz) {
        (DMatrix::zeros(m, n), DMatrix::zeros(n, p))
    } else {
        let x = care(a, b)?;
        let f = -(b.transpose() * x);
        let xd = care(&a.transpose(), &c.transpose())?;
        let l = -(xd * c.transpose());
        (f, l)
    };
    let af = a + b * &f;
    let al = a + &l * c;
    for (name, closed) in [("A + B F", &af), ("A + L C", &al)] {
        let abscissa = linalg::eigenvalues(closed)
            .iter()
            .fold(f64::NEG_INFINITY, |acc, z| acc.max(z.re));
        if n > 0 && abscissa >= -tol.hurwitz {
            return Err(Error::Numerical(format!(
                "{name} is not Hurwitz (abscissa {abscissa:e})"
            )));
        }
    }

    let t = s.tol();
    let cf = c + d * &f;
    let bl = b + &l * d;
    let (im, ip) = (DMatrix::identity(m, m), DMatrix::identity(p, p));
    Ok(CoprimeFactors {
        m: ss(&af, b.clone(), f.clone(), im.clone(), t),
        n: ss(&af, b.clone(), cf.clone(), d.clone(), t),
        x: ss(&al, -&bl, f.clone(), im, t),
        y: ss(&al, l.clone(), f.clone(), DMatrix::zeros(m, p), t),
        m_tilde: ss(&al, l.clone(), c.clone(), ip.clone(), t),
        n_tilde: ss(&al, bl, c.clone(), d.clone(), t),
        x_tilde: ss(&af, -&l, cf, ip, t),
        y_tilde: ss(&af, l.clone(), f.clone(), DMatrix::zeros(m, p), t),
        source: s.clone(),
        f,
        l,
    })
}

impl CoprimeFactors {
    /// `max ‖X M + Y N - I‖` and `max ‖M̃ X̃ + Ñ Ỹ - I‖` over the points.
    pub fn bezout_residuals(&self, points: &[C64]) -> Result<(f64, f64)> {
        let (mut right, mut left) = (0.0f64, 0.0f64);
        let (m, p) = (self.m.inputs(), self.m_tilde.outputs());
        for &z in points {
            let r = self.x.eval(z)? * self.m.eval(z)? + self.y.eval(z)? * self.n.eval(z)?;
            right = right.max((r - CMatrix::identity(m, m)).norm());
            let l = self.m_tilde.eval(z)? * self.x_tilde.eval(z)?
                + self.n_tilde.eval(z)? * self.y_tilde.eval(z)?;
            left = left.max((l - CMatrix::identity(p, p)).norm());
        }
        Ok((right, left))
    }

    /// `max ‖N M^{-1} - P‖` and `max ‖M̃^{-1} Ñ - P‖` over the points.
    pub fn reconstruction_residuals(&self, points: &[C64]) -> Result<(f64, f64)> {
        let (mut right, mut left) = (0.0f64, 0.0f64);
        for &z in points {
            let g = self.source.eval(z)?;
            let minv = self
                .m
                .eval(z)?
                .try_inverse()
                .ok_or_else(|| singular_at(z))?;
            right = right.max((self.n.eval(z)? * minv - &g).norm());
            let mtinv = self
                .m_tilde
                .eval(z)?
                .try_inverse()
                .ok_or_else(|| singular_at(z))?;
            left = left.max((mtinv * self.n_tilde.eval(z)? - &g).norm());
        }
        Ok((right, left))
    }

    pub fn all_stable(&self, margin: f64) -> bool {
        [
            &self.m,
            &self.n,
            &self.m_tilde,
            &self.n_tilde,
            &self.x,
            &self.y,
            &self.x_tilde,
            &self.y_tilde,
        ]
        .iter()
        .all(|f| f.order() == 0 || f.is_hurwitz(margin))
    }
}

fn singular_at(z: C64) -> Error {
    Error::Numerical(format!(
        "denominator factor singular at {}",
        linalg::fmt_complex(z)
    ))
}

/// Kernels of the denominator factors common to all agents at `λ`:
/// `⋂ ker M_i(λ)^H` (rcf branch) and `⋂ ker M̃_i(λ)` (lcf branch).
pub fn denominator_kernel_test(
    agents: &[CoprimeFactors],
    lambda: C64,
    tol: &Tolerances,
) -> Result<(Subspace, Subspace)> {
    if !tol.in_closed_rhp(lambda) {
        return Err(Error::Domain(format!(
            "{} is in the open left half-plane",
            linalg::fmt_complex(lambda)
        )));
    }
    let first = agents
        .first()
        .ok_or_else(|| Error::Dimension("no agents".into()))?;
    let (m, p) = (first.m.inputs(), first.m_tilde.outputs());
    let mut rcf = Vec::with_capacity(agents.len());
    let mut lcf = Vec::with_capacity(agents.len());
    for (i, f) in agents.iter().enumerate() {
        if f.m.inputs() != m || f.m_tilde.outputs() != p {
            return Err(Error::Dimension(format!(
                "agent {} has different dimensions",
                i + 1
            )));
        }
        let mv = f.m.eval(lambda)?;
        let mtv = f.m_tilde.eval(lambda)?;
        let left = linalg::left_null_space(&mv, tol.cluster, Some(linalg::norm2(&mv).max(1.0)));
        let right = linalg::null_space(&mtv, tol.cluster, Some(linalg::norm2(&mtv).max(1.0)));
        rcf.push(Subspace::span(&left, tol.rank));
        lcf.push(Subspace::span(&right, tol.rank));
    }
    Ok((
        crate::ssreal::subspace_intersect(&rcf)?,
        crate::ssreal::subspace_intersect(&lcf)?,
    ))
}
