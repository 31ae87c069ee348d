use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};

use crate::linalg;
use crate::{Error, Result, C64};

/// Real polynomial in `s`, coefficients in ascending powers.
///
/// The coefficient vector is kept trimmed: the last stored coefficient is
/// nonzero, and the zero polynomial stores no coefficients at all.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    /// `s^k`
    pub fn monomial(k: usize) -> Self {
        let mut c = vec![0.0; k + 1];
        c[k] = 1.0;
        Self { coeffs: c }
    }

    /// Monic polynomial with the given roots. Complex roots must come in
    /// conjugate pairs for the result to be real; imaginary residue is dropped.
    pub fn from_roots(roots: &[C64]) -> Self {
        let mut c = vec![C64::new(1.0, 0.0)];
        for &r in roots {
            let mut next = vec![C64::new(0.0, 0.0); c.len() + 1];
            for (i, &ci) in c.iter().enumerate() {
                next[i + 1] += ci;
                next[i] -= ci * r;
            }
            c = next;
        }
        Self::new(c.into_iter().map(|z| z.re).collect())
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// `None` for the zero polynomial (degree −∞).
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn leading(&self) -> f64 {
        self.coeffs.last().copied().unwrap_or(0.0)
    }

    pub fn norm_inf(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn norm2(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn eval_complex(&self, z: C64) -> C64 {
        self.coeffs
            .iter()
            .rev()
            .fold(C64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    pub fn scale(&self, k: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * k).collect())
    }

    pub fn monic(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        self.scale(1.0 / self.leading())
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * i as f64)
                .collect(),
        )
    }

    /// Drops leading coefficients whose magnitude is below `rel` times the
    /// largest coefficient. Used to clean cancellation noise.
    pub fn trim_relative(&self, rel: f64) -> Self {
        let thr = rel * self.norm_inf();
        let mut c = self.coeffs.clone();
        while c.last().is_some_and(|x| x.abs() <= thr) {
            c.pop();
        }
        Self::new(c)
    }

    /// Multiplicity of the root at the origin, counted exactly.
    pub fn origin_multiplicity(&self) -> usize {
        self.coeffs.iter().take_while(|&&c| c == 0.0).count()
    }

    fn shift_down(&self, k: usize) -> Self {
        Self::new(self.coeffs[k.min(self.coeffs.len())..].to_vec())
    }

    /// Euclidean division `self = q * d + r` with `deg r < deg d`.
    pub fn div_rem(&self, d: &Polynomial) -> Result<(Polynomial, Polynomial)> {
        let dd = d
            .degree()
            .ok_or_else(|| Error::Domain("division by the zero polynomial".into()))?;
        let Some(dn) = self.degree() else {
            return Ok((Self::zero(), Self::zero()));
        };
        if dn < dd {
            return Ok((Self::zero(), self.clone()));
        }
        let mut r = self.coeffs.clone();
        let mut q = vec![0.0; dn - dd + 1];
        let lead = d.leading();
        for k in (0..=dn - dd).rev() {
            let f = r[k + dd] / lead;
            q[k] = f;
            for (j, &dc) in d.coeffs.iter().enumerate() {
                r[k + j] -= f * dc;
            }
            r[k + dd] = 0.0;
        }
        r.truncate(dd);
        Ok((Self::new(q), Self::new(r)))
    }

    /// Exact division by a known factor, solved in the least-squares sense
    /// so that coefficient noise in `self` is spread rather than accumulated.
    pub fn deconvolve(&self, divisor: &Polynomial) -> Result<Polynomial> {
        let dd = divisor
            .degree()
            .ok_or_else(|| Error::Domain("division by the zero polynomial".into()))?;
        let Some(dn) = self.degree() else {
            return Ok(Self::zero());
        };
        if dn < dd {
            return Err(Error::Domain(
                "deconvolution divisor has higher degree than dividend".into(),
            ));
        }
        let k = dn - dd;
        let conv = convolution_matrix(divisor, k);
        let rhs = DVector::from_column_slice(&self.coeffs);
        let q = lstsq(&conv, &rhs)?;
        Ok(Self::new(q.iter().copied().collect()))
    }
}

/// Matrix `T` with `T * g = divisor * g` for `deg g = k`.
fn convolution_matrix(divisor: &Polynomial, k: usize) -> DMatrix<f64> {
    let dd = divisor.coeffs.len();
    let mut t = DMatrix::zeros(dd + k, k + 1);
    for col in 0..=k {
        for (j, &c) in divisor.coeffs.iter().enumerate() {
            t[(col + j, col)] = c;
        }
    }
    t
}

fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let rhs = DMatrix::from_column_slice(b.len(), 1, b.as_slice());
    let x = linalg::lstsq(a, &rhs, 1e-14);
    if x.iter().all(|v| v.is_finite()) {
        Ok(x.column(0).into_owned())
    } else {
        Err(Error::Numerical(
            "least-squares solve produced non-finite values".into(),
        ))
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, &c) in self.coeffs.iter().enumerate().rev() {
            if c == 0.0 {
                continue;
            }
            let sign = if c < 0.0 { "-" } else { "+" };
            if first {
                if c < 0.0 {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            let a = c.abs();
            match k {
                0 => write!(f, "{a}")?,
                _ if a != 1.0 => write!(f, "{a}")?,
                _ => {}
            }
            match k {
                0 => {}
                1 => write!(f, "s")?,
                _ => write!(f, "s^{k}")?,
            }
            first = false;
        }
        Ok(())
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let c = (0..n)
            .map(|i| self.coeffs.get(i).unwrap_or(&0.0) + rhs.coeffs.get(i).unwrap_or(&0.0))
            .collect();
        Polynomial::new(c)
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self + &(-rhs)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        Polynomial::new(self.coeffs.iter().map(|c| -c).collect())
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        if self.is_zero() || rhs.is_zero() {
            return Polynomial::zero();
        }
        let mut c = vec![0.0; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Polynomial::new(c)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Polynomial {
            type Output = Polynomial;
            fn $m(self, rhs: Polynomial) -> Polynomial {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

/// Roots of `p` with multiplicity.
///
/// Roots at the origin are peeled off exactly; the rest come from the
/// eigenvalues of the balanced companion matrix. Isolated roots get a Newton
/// polish, near-coincident roots are replaced by their cluster mean (which is
/// far more accurate than the individual members), and complex roots are
/// returned in exact conjugate pairs.
pub fn poly_roots(p: &Polynomial) -> Result<Vec<C64>> {
    if p.is_zero() {
        return Err(Error::Domain("roots of the zero polynomial".into()));
    }
    let k0 = p.origin_multiplicity();
    let q = p.shift_down(k0).monic();
    let mut roots = vec![C64::new(0.0, 0.0); k0];
    let d = q.degree().unwrap_or(0);
    if d == 0 {
        return Ok(roots);
    }
    let mut comp = DMatrix::zeros(d, d);
    for i in 1..d {
        comp[(i, i - 1)] = 1.0;
    }
    for i in 0..d {
        comp[(i, d - 1)] = -q.coeffs[i];
    }
    let raw = linalg::eigenvalues(&comp);

    let mut refined = Vec::with_capacity(d);
    let dq = q.derivative();
    for (z, mult) in cluster_scaled(&raw, 1e-5) {
        if mult == 1 {
            refined.push(newton_polish(&q, &dq, z));
        } else {
            refined.extend(std::iter::repeat_n(z, mult));
        }
    }
    roots.extend(conjugate_pairs(refined));
    Ok(roots)
}

fn cluster_scaled(values: &[C64], rel: f64) -> Vec<(C64, usize)> {
    let scale = values.iter().fold(1.0f64, |m, z| m.max(z.norm()));
    linalg::cluster(values, rel * scale)
}

fn newton_polish(p: &Polynomial, dp: &Polynomial, mut z: C64) -> C64 {
    let mut best = p.eval_complex(z).norm();
    for _ in 0..3 {
        let d = dp.eval_complex(z);
        if d.norm() == 0.0 {
            break;
        }
        let cand = z - p.eval_complex(z) / d;
        let r = p.eval_complex(cand).norm();
        if r < best {
            best = r;
            z = cand;
        } else {
            break;
        }
    }
    z
}

fn conjugate_pairs(mut roots: Vec<C64>) -> Vec<C64> {
    for z in roots.iter_mut() {
        if z.im.abs() <= 1e-10 * z.norm().max(1.0) {
            z.im = 0.0;
        }
    }
    let (real, mut upper): (Vec<C64>, Vec<C64>) = roots.into_iter().partition(|z| z.im == 0.0);
    let lower: Vec<C64> = upper.iter().filter(|z| z.im < 0.0).copied().collect();
    upper.retain(|z| z.im > 0.0);
    let mut out = real;
    let mut used = vec![false; lower.len()];
    for u in upper {
        let partner = lower
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .min_by(|a, b| {
                (a.1 - u.conj())
                    .norm()
                    .partial_cmp(&(b.1 - u.conj()).norm())
                    .unwrap()
            })
            .map(|(i, l)| (i, *l));
        let z = match partner {
            Some((i, l)) => {
                used[i] = true;
                (u + l.conj()) / 2.0
            }
            None => u,
        };
        out.push(z);
        out.push(z.conj());
    }
    out.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap()
            .then(a.im.partial_cmp(&b.im).unwrap())
    });
    out
}

/// Monic approximate greatest common divisor.
///
/// The GCD degree is `deg p + deg q - rank Syl(p, q)` with the rank decided at
/// `tol * sigma_max` on the unit-norm scaled Sylvester matrix. The cofactors
/// come from the null vector of the degree-`k` subresultant matrix and the
/// GCD itself from a joint least-squares deconvolution.
pub fn poly_gcd(p: &Polynomial, q: &Polynomial, tol: f64) -> Result<Polynomial> {
    match (p.is_zero(), q.is_zero()) {
        (true, true) => return Err(Error::Domain("gcd of two zero polynomials".into())),
        (true, false) => return Ok(q.monic()),
        (false, true) => return Ok(p.monic()),
        _ => {}
    }
    let k0 = p.origin_multiplicity().min(q.origin_multiplicity());
    let origin = Polynomial::monomial(k0);
    let p = p.shift_down(k0);
    let q = q.shift_down(k0);
    let p = p.scale(1.0 / p.norm2());
    let q = q.scale(1.0 / q.norm2());
    let n = p.degree().unwrap();
    let m = q.degree().unwrap();
    if n == 0 || m == 0 {
        return Ok(origin);
    }

    let syl = subresultant(&p, &q, 0);
    let sv = linalg::singular_values(&syl);
    let smax = sv.first().copied().unwrap_or(0.0);
    let r = sv.iter().filter(|&&s| s > tol * smax).count();
    let k = n + m - r;
    if k == 0 {
        return Ok(origin);
    }
    let k = k.min(n).min(m);

    // S_k is tall for k >= 1, so the thin SVD already carries the full V;
    // the cofactor pair is its smallest right singular vector.
    let sk = subresultant(&p, &q, k);
    let v_all = linalg::svd(&sk).v;
    let z = v_all.column(v_all.ncols() - 1).into_owned();
    let nv = m - k + 1;
    let v = Polynomial::new(z.rows(0, nv).iter().copied().collect());
    let u = Polynomial::new(z.rows(nv, n - k + 1).iter().map(|x| -x).collect());
    if u.degree() != Some(n - k) || v.degree() != Some(m - k) {
        return Err(Error::Numerical("degenerate gcd cofactors".into()));
    }

    let mut stacked = DMatrix::zeros((n + 1) + (m + 1), k + 1);
    stacked
        .view_mut((0, 0), (n + 1, k + 1))
        .copy_from(&convolution_matrix(&u, k));
    stacked
        .view_mut((n + 1, 0), (m + 1, k + 1))
        .copy_from(&convolution_matrix(&v, k));
    let mut rhs = DVector::zeros((n + 1) + (m + 1));
    rhs.rows_mut(0, n + 1).copy_from_slice(p.coeffs());
    rhs.rows_mut(n + 1, m + 1).copy_from_slice(q.coeffs());
    let g = lstsq(&stacked, &rhs)?;
    let g = Polynomial::new(g.iter().copied().collect()).monic();
    Ok(&g * &origin)
}

/// Columns: `deg q - k + 1` shifts of `p`, then `deg p - k + 1` shifts of `q`.
/// For `k = 0` this is the (transposed) Sylvester matrix.
fn subresultant(p: &Polynomial, q: &Polynomial, k: usize) -> DMatrix<f64> {
    let n = p.degree().unwrap();
    let m = q.degree().unwrap();
    let rows = n + m - k + if k == 0 { 0 } else { 1 };
    let (cp, cq) = if k == 0 {
        (m, n)
    } else {
        (m - k + 1, n - k + 1)
    };
    let mut s = DMatrix::zeros(rows, cp + cq);
    for col in 0..cp {
        for (j, &c) in p.coeffs.iter().enumerate() {
            s[(col + j, col)] = c;
        }
    }
    for col in 0..cq {
        for (j, &c) in q.coeffs.iter().enumerate() {
            s[(col + j, cp + col)] = c;
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn poly(c: &[f64]) -> Polynomial {
        Polynomial::new(c.to_vec())
    }

    fn sorted_real(mut r: Vec<C64>) -> Vec<f64> {
        r.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        r.iter().map(|z| z.re).collect()
    }

    #[test]
    fn roots_of_s2_plus_s() {
        let r = sorted_real(poly_roots(&poly(&[0.0, 1.0, 1.0])).unwrap());
        assert_eq!(r, vec![-1.0, 0.0]);
    }

    #[test]
    fn roots_of_lowest_common_denominator_with_double_root() {
        // (s+2)(2s+1)^2(3s+1)
        let p =
            &(&poly(&[2.0, 1.0]) * &poly(&[1.0, 2.0])) * &(&poly(&[1.0, 2.0]) * &poly(&[1.0, 3.0]));
        let r = sorted_real(poly_roots(&p).unwrap());
        let want = [-2.0, -0.5, -0.5, -1.0 / 3.0];
        for (a, b) in r.iter().zip(want) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-8);
        }
    }

    #[test]
    fn roots_of_zero_polynomial_is_an_error() {
        assert!(matches!(
            poly_roots(&Polynomial::zero()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn complex_roots_come_in_conjugate_pairs() {
        // s^2 + 2s + 5 -> -1 ± 2i
        let r = poly_roots(&poly(&[5.0, 2.0, 1.0])).unwrap();
        assert_eq!(r.len(), 2);
        assert_eq!(r[0], r[1].conj());
        assert_abs_diff_eq!(r[0].re, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r[0].im.abs(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn gcd_examples() {
        let g = poly_gcd(&poly(&[-1.0, 0.0, 1.0]), &poly(&[-1.0, 1.0]), 1e-8).unwrap();
        assert_abs_diff_eq!(g.coeffs()[0], -1.0, epsilon = 1e-12);
        assert_eq!(g.degree(), Some(1));

        let g = poly_gcd(&poly(&[0.0, 1.0]), &poly(&[1.0, 1.0]), 1e-8).unwrap();
        assert_eq!(g, Polynomial::one());
    }

    #[test]
    fn gcd_of_products_recovers_shared_factor() {
        // (s+0.5)^2 (s-3) and (s+0.5)(s+7)
        let a = poly(&[0.5, 1.0]);
        let p = &(&a * &a) * &poly(&[-3.0, 1.0]);
        let q = &a * &poly(&[7.0, 1.0]);
        let g = poly_gcd(&p, &q, 1e-8).unwrap();
        assert_eq!(g.degree(), Some(1));
        assert_abs_diff_eq!(g.coeffs()[0], 0.5, epsilon = 1e-8);
        assert_abs_diff_eq!(g.coeffs()[1], 1.0, epsilon = 1e-8);
    }

    #[test]
    fn gcd_keeps_origin_roots_exact() {
        let p = poly(&[0.0, 0.0, 1.0, 1.0]); // s^2 (s+1)
        let q = poly(&[0.0, 2.0, 1.0]); // s (s+2)
        assert_eq!(poly_gcd(&p, &q, 1e-8).unwrap(), Polynomial::monomial(1));
    }

    #[test]
    fn division_and_deconvolution_agree() {
        let d = poly(&[3.0, 1.0]);
        let p = &d * &poly(&[1.0, -2.0, 0.5]);
        let (q, r) = p.div_rem(&d).unwrap();
        assert!(r.norm_inf() < 1e-12);
        let q2 = p.deconvolve(&d).unwrap();
        for (a, b) in q.coeffs().iter().zip(q2.coeffs()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn display() {
        assert_eq!(poly(&[1.0, 0.0, -2.0]).to_string(), "-2s^2 + 1");
        assert_eq!(poly(&[0.0, 1.0]).to_string(), "s");
        assert_eq!(Polynomial::zero().to_string(), "0");
    }
}
