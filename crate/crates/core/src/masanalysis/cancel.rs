use crate::error::{Error, Result};
use crate::linalg;
use crate::ratpoly::RationalMatrix;
use crate::ssreal::{minimalize, pbh_uncontrollable, realize_tol, StateSpace, Subspace};
use crate::tol::Tolerances;
use crate::C64;

/// Loss of a closed right-half-plane pole in the cascades `P K` and `K P`.
#[derive(Clone, Debug)]
pub struct CancellationReport {
    pub lambda: C64,
    pub canceled_in_pk: bool,
    pub canceled_in_kp: bool,
    /// `deg P + deg K - deg (P K)`.
    pub degree_deficit: usize,
    /// `deg P + deg K - deg (K P)`.
    pub degree_deficit_kp: usize,
    /// Multiplicity of `λ` in `P K` before and after reduction.
    pub multiplicity_pk: (usize, usize),
    pub multiplicity_kp: (usize, usize),
    /// Left null vectors of `[A - λI, B]` for the series realization of
    /// `P K`; nontrivial when the PBH controllability test fails.
    pub pbh_left_null: Subspace,
}

/// Eigenvalues within a small radius of `λ`; the radius is wide enough for
/// the scatter of a repeated eigenvalue.
fn multiplicity(s: &StateSpace, lambda: C64, tol: &Tolerances) -> usize {
    let radius = tol.cluster.max(1e-4 * lambda.norm().max(1.0));
    s.eigenvalues()
        .iter()
        .filter(|z| (**z - lambda).norm() <= radius)
        .count()
}

pub fn cancellation_check(
    p_agg: &RationalMatrix,
    k: &RationalMatrix,
    lambda: C64,
    tol: &Tolerances,
) -> Result<CancellationReport> {
    cancellation_check_ss(
        &realize_tol(p_agg, tol.rank)?,
        &realize_tol(k, tol.rank)?,
        lambda,
        tol,
    )
}

/// Cascade realizations are built from minimal realizations of `P` and `K`.
pub fn cancellation_check_ss(
    p: &StateSpace,
    k: &StateSpace,
    lambda: C64,
    tol: &Tolerances,
) -> Result<CancellationReport> {
    let p = minimalize(&p.clone().with_tol(tol.rank));
    let k = minimalize(&k.clone().with_tol(tol.rank));
    if !tol.in_closed_rhp(lambda) || multiplicity(&p, lambda, tol) == 0 {
        return Err(Error::Domain(format!(
            "{} is not a closed right-half-plane pole of the plant",
            linalg::fmt_complex(lambda)
        )));
    }
    let pk = k.then(&p)?;
    let kp = p.then(&k)?;
    let pk_min = minimalize(&pk);
    let kp_min = minimalize(&kp);
    let multiplicity_pk = (
        multiplicity(&pk, lambda, tol),
        multiplicity(&pk_min, lambda, tol),
    );
    let multiplicity_kp = (
        multiplicity(&kp, lambda, tol),
        multiplicity(&kp_min, lambda, tol),
    );
    let thr = tol.cluster;
    let (_, pbh_left_null) = pbh_uncontrollable(pk.a(), pk.b(), lambda, thr);
    Ok(CancellationReport {
        lambda,
        canceled_in_pk: multiplicity_pk.1 < multiplicity_pk.0,
        canceled_in_kp: multiplicity_kp.1 < multiplicity_kp.0,
        degree_deficit: pk.order() - pk_min.order(),
        degree_deficit_kp: kp.order() - kp_min.order(),
        multiplicity_pk,
        multiplicity_kp,
        pbh_left_null,
    })
}
