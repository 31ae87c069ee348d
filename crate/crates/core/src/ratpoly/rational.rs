use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use super::poly::{poly_gcd, poly_roots, Polynomial};
use super::DEFAULT_TOL;
use crate::{Error, Result, C64};

/// Leading coefficients below this fraction of the largest one are treated as
/// cancellation noise after arithmetic.
const NOISE: f64 = 1e-13;

/// Real-rational scalar transfer function `num(s) / den(s)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalFunction {
    num: Polynomial,
    den: Polynomial,
}

impl RationalFunction {
    pub fn new(num: Polynomial, den: Polynomial) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::Domain(
                "rational function with zero denominator".into(),
            ));
        }
        Ok(Self { num, den })
    }

    /// Builds from ascending coefficient lists and normalises.
    pub fn from_coeffs(num: &[f64], den: &[f64]) -> Result<Self> {
        Ok(
            Self::new(Polynomial::new(num.to_vec()), Polynomial::new(den.to_vec()))?
                .simplify(DEFAULT_TOL),
        )
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    pub fn constant(c: f64) -> Self {
        Self {
            num: Polynomial::constant(c),
            den: Polynomial::one(),
        }
    }

    pub fn from_poly(p: Polynomial) -> Self {
        Self {
            num: p,
            den: Polynomial::one(),
        }
    }

    pub fn num(&self) -> &Polynomial {
        &self.num
    }

    pub fn den(&self) -> &Polynomial {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_proper(&self) -> bool {
        match self.num.degree() {
            None => true,
            Some(dn) => dn <= self.den.degree().unwrap(),
        }
    }

    pub fn is_constant(&self) -> bool {
        self.den.degree() == Some(0) && self.num.degree().unwrap_or(0) == 0
    }

    pub fn eval(&self, s: C64) -> C64 {
        self.num.eval_complex(s) / self.den.eval_complex(s)
    }

    /// Value at `s = ∞` for proper functions.
    pub fn high_frequency_gain(&self) -> Option<f64> {
        let dd = self.den.degree().unwrap();
        match self.num.degree() {
            None => Some(0.0),
            Some(dn) if dn < dd => Some(0.0),
            Some(dn) if dn == dd => Some(self.num.leading() / self.den.leading()),
            _ => None,
        }
    }

    /// Canonical form: common factors removed at `tol`, monic denominator,
    /// `0/1` for the zero function.
    pub fn simplify(&self, tol: f64) -> Self {
        let num = self.num.trim_relative(NOISE);
        if num.is_zero() {
            return Self::zero();
        }
        let den = self.den.trim_relative(NOISE);
        let (num, den) = match poly_gcd(&num, &den, tol) {
            Ok(g) if g.degree().unwrap_or(0) > 0 => {
                match (num.deconvolve(&g), den.deconvolve(&g)) {
                    (Ok(n), Ok(d)) => (n, d),
                    _ => (num, den),
                }
            }
            _ => (num, den),
        };
        let lead = den.leading();
        Self {
            num: num.scale(1.0 / lead),
            den: den.scale(1.0 / lead),
        }
    }

    pub fn poles(&self) -> Result<Vec<C64>> {
        poly_roots(&self.simplify(DEFAULT_TOL).den)
    }

    pub fn zeros(&self) -> Result<Vec<C64>> {
        let f = self.simplify(DEFAULT_TOL);
        if f.num.is_zero() {
            return Ok(Vec::new());
        }
        poly_roots(&f.num)
    }

    pub fn scale(&self, k: f64) -> Self {
        if k == 0.0 {
            return Self::zero();
        }
        Self {
            num: self.num.scale(k),
            den: self.den.clone(),
        }
    }

    pub fn add_tol(&self, rhs: &Self, tol: f64) -> Self {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        if self.den == rhs.den {
            return Self {
                num: &self.num + &rhs.num,
                den: self.den.clone(),
            }
            .simplify(tol);
        }
        Self {
            num: &(&self.num * &rhs.den) + &(&rhs.num * &self.den),
            den: &self.den * &rhs.den,
        }
        .simplify(tol)
    }

    pub fn mul_tol(&self, rhs: &Self, tol: f64) -> Self {
        if self.is_zero() || rhs.is_zero() {
            return Self::zero();
        }
        if self.is_constant() {
            return rhs.scale(self.num.leading() / self.den.leading());
        }
        if rhs.is_constant() {
            return self.scale(rhs.num.leading() / rhs.den.leading());
        }
        Self {
            num: &self.num * &rhs.num,
            den: &self.den * &rhs.den,
        }
        .simplify(tol)
    }

    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::Domain(
                "inverse of the zero rational function".into(),
            ));
        }
        Ok(Self {
            num: self.den.clone(),
            den: self.num.clone(),
        }
        .simplify(DEFAULT_TOL))
    }

    pub fn div(&self, rhs: &Self) -> Result<Self> {
        Ok(self.mul_tol(&rhs.inv()?, DEFAULT_TOL))
    }
}

impl fmt::Display for RationalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == Polynomial::one() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({}) / ({})", self.num, self.den)
        }
    }
}

impl Add for &RationalFunction {
    type Output = RationalFunction;
    fn add(self, rhs: &RationalFunction) -> RationalFunction {
        self.add_tol(rhs, DEFAULT_TOL)
    }
}

impl Sub for &RationalFunction {
    type Output = RationalFunction;
    fn sub(self, rhs: &RationalFunction) -> RationalFunction {
        self.add_tol(&-rhs, DEFAULT_TOL)
    }
}

impl Mul for &RationalFunction {
    type Output = RationalFunction;
    fn mul(self, rhs: &RationalFunction) -> RationalFunction {
        self.mul_tol(rhs, DEFAULT_TOL)
    }
}

impl Neg for &RationalFunction {
    type Output = RationalFunction;
    fn neg(self) -> RationalFunction {
        RationalFunction {
            num: -&self.num,
            den: self.den.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn rf(n: &[f64], d: &[f64]) -> RationalFunction {
        RationalFunction::new(Polynomial::new(n.to_vec()), Polynomial::new(d.to_vec())).unwrap()
    }

    #[test]
    fn simplify_removes_common_factor() {
        let f = rf(&[0.0, 1.0, 1.0], &[0.0, 1.0]).simplify(1e-8);
        assert_eq!(f.den(), &Polynomial::one());
        assert_abs_diff_eq!(f.num().coeffs()[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.num().coeffs()[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn simplify_to_constant() {
        let f = rf(&[-1.0, 1.0], &[-2.0, 2.0]).simplify(1e-8);
        assert!(f.is_constant());
        assert_abs_diff_eq!(f.num().coeffs()[0], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn zero_denominator_rejected() {
        assert!(RationalFunction::new(Polynomial::one(), Polynomial::zero()).is_err());
    }

    #[test]
    fn add_with_shared_denominator_cancels_exactly() {
        let a = rf(&[1.0], &[0.0, 1.0]);
        let z = &a - &a;
        assert!(z.is_zero());
    }

    #[test]
    fn properness() {
        assert!(rf(&[1.0, 1.0], &[1.0, 1.0]).is_proper());
        assert!(!rf(&[0.0, 0.0, 1.0], &[1.0, 1.0]).is_proper());
        assert_eq!(
            rf(&[0.0, 2.0], &[1.0, 1.0]).high_frequency_gain(),
            Some(2.0)
        );
    }
}
