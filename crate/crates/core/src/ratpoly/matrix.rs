use std::fmt;

use nalgebra::DMatrix;

use super::rational::RationalFunction;
use super::DEFAULT_TOL;
use crate::linalg::{self, CMatrix};
use crate::{Error, Result, C64};

/// `rows x cols` matrix of real-rational transfer functions, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<RationalFunction>,
}

impl RationalMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<RationalFunction>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries supplied for a {rows}x{cols} rational matrix",
                entries.len()
            )));
        }
        Ok(Self {
            rows,
            cols,
            entries,
        })
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> RationalFunction,
    ) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        Self {
            rows,
            cols,
            entries,
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |_, _| RationalFunction::zero())
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| {
            if i == j {
                RationalFunction::one()
            } else {
                RationalFunction::zero()
            }
        })
    }

    pub fn from_constant(a: &DMatrix<f64>) -> Self {
        Self::from_fn(a.nrows(), a.ncols(), |i, j| {
            RationalFunction::constant(a[(i, j)])
        })
    }

    /// `f(s) * I_n`
    pub fn scalar_identity(f: &RationalFunction, n: usize) -> Self {
        Self::from_fn(n, n, |i, j| {
            if i == j {
                f.clone()
            } else {
                RationalFunction::zero()
            }
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, i: usize, j: usize) -> &RationalFunction {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, f: RationalFunction) {
        self.entries[i * self.cols + j] = f;
    }

    pub fn entries(&self) -> &[RationalFunction] {
        &self.entries
    }

    pub fn is_proper(&self) -> bool {
        self.entries.iter().all(RationalFunction::is_proper)
    }

    pub fn eval(&self, s: C64) -> CMatrix {
        CMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j).eval(s))
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn submatrix(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Self {
        let (r0, c0) = (rows.start, cols.start);
        Self::from_fn(rows.len(), cols.len(), |i, j| {
            self.get(r0 + i, c0 + j).clone()
        })
    }

    pub fn simplify(&self, tol: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|f| f.simplify(tol)).collect(),
        }
    }

    pub fn scale(&self, k: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|f| f.scale(k)).collect(),
        }
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        self.add_tol(rhs, DEFAULT_TOL)
    }

    pub fn add_tol(&self, rhs: &Self, tol: f64) -> Result<Self> {
        if self.shape() != rhs.shape() {
            return Err(Error::Dimension(format!(
                "cannot add {}x{} and {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            entries: self
                .entries
                .iter()
                .zip(&rhs.entries)
                .map(|(a, b)| a.add_tol(b, tol))
                .collect(),
        })
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        self.add(&rhs.scale(-1.0))
    }

    pub fn mul(&self, rhs: &Self) -> Result<Self> {
        self.mul_tol(rhs, DEFAULT_TOL)
    }

    pub fn mul_tol(&self, rhs: &Self, tol: f64) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for j in 0..rhs.cols {
                let mut acc = RationalFunction::zero();
                for k in 0..self.cols {
                    let a = self.get(i, k);
                    let b = rhs.get(k, j);
                    if a.is_zero() || b.is_zero() {
                        continue;
                    }
                    acc = acc.add_tol(&a.mul_tol(b, tol), tol);
                }
                out.set(i, j, acc);
            }
        }
        Ok(out)
    }

    /// Kronecker product `a ⊗ g` of a constant matrix with a rational one.
    pub fn kron_const(a: &DMatrix<f64>, g: &Self) -> Self {
        let (gr, gc) = g.shape();
        Self::from_fn(a.nrows() * gr, a.ncols() * gc, |i, j| {
            g.get(i % gr, j % gc).scale(a[(i / gr, j / gc)])
        })
    }

    pub fn block_diag(blocks: &[RationalMatrix]) -> Self {
        let rows = blocks.iter().map(|b| b.rows).sum();
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut out = Self::zeros(rows, cols);
        let (mut r0, mut c0) = (0, 0);
        for b in blocks {
            for i in 0..b.rows {
                for j in 0..b.cols {
                    out.set(r0 + i, c0 + j, b.get(i, j).clone());
                }
            }
            r0 += b.rows;
            c0 += b.cols;
        }
        out
    }

    /// Largest pole magnitude over all entries (0 for a constant matrix).
    pub fn max_pole_magnitude(&self) -> f64 {
        self.entries
            .iter()
            .filter(|f| !f.is_zero())
            .flat_map(|f| f.poles().unwrap_or_default())
            .fold(0.0, |m, z| m.max(z.norm()))
    }

    /// Normal rank: the maximum numerical rank over sample points on the
    /// circle of radius `2 + max |pole|`.
    pub fn normal_rank(&self, tol: f64) -> usize {
        if self.rows == 0 || self.cols == 0 {
            return 0;
        }
        let radius = 2.0 + self.max_pole_magnitude();
        normal_rank_points(radius)
            .map(|s| {
                let m = self.eval(s);
                let smax = linalg::norm2(&m);
                if smax == 0.0 {
                    0
                } else {
                    linalg::rank(&m, tol, Some(smax))
                }
            })
            .max()
            .unwrap_or(0)
    }
}

/// Seven points on a circle at angles that avoid the real axis and any
/// rational fraction of a turn.
pub(crate) fn normal_rank_points(radius: f64) -> impl Iterator<Item = C64> {
    (0..7).map(move |k| {
        let theta = 0.377 + std::f64::consts::TAU * (k as f64) / 7.0;
        C64::from_polar(radius, theta)
    })
}

impl fmt::Display for RationalMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| self.get(i, j).to_string()).collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}
