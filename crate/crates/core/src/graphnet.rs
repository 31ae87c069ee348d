//! Interaction graphs, incidence matrices and coupling factors.
//!
//! Vertex ids are 1-based at the API boundary (as in edge lists of
//! description files) and 0-based internally.

use nalgebra::DMatrix;
use petgraph::unionfind::UnionFind;

use crate::error::{Error, Result};
use crate::linalg;

/// Oriented graph; parallel edges are allowed, self-loops are not.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    num_vertices: usize,
    /// `(head, tail)`, 0-based.
    edges: Vec<(usize, usize)>,
}

impl Graph {
    /// Builds a graph from 1-based `(head, tail)` pairs.
    pub fn new(num_vertices: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut out = Vec::with_capacity(edges.len());
        for (j, &(h, t)) in edges.iter().enumerate() {
            for v in [h, t] {
                if v == 0 || v > num_vertices {
                    return Err(Error::Domain(format!(
                        "edge {}: vertex {v} outside 1..={num_vertices}",
                        j + 1
                    )));
                }
            }
            if h == t {
                return Err(Error::Domain(format!(
                    "edge {}: self-loop at vertex {h}",
                    j + 1
                )));
            }
            out.push((h - 1, t - 1));
        }
        Ok(Self {
            num_vertices,
            edges: out,
        })
    }

    /// Path `1 - 2 - ... - n`, edges oriented `(k, k+1)`.
    pub fn path(n: usize) -> Self {
        let edges: Vec<_> = (1..n).map(|k| (k, k + 1)).collect();
        Self::new(n, &edges).expect("valid path")
    }

    /// Star with vertex `n` at the center, edges `(k, n)`.
    pub fn star(n: usize) -> Self {
        let edges: Vec<_> = (1..n).map(|k| (k, n)).collect();
        Self::new(n, &edges).expect("valid star")
    }

    /// Cycle `1 - 2 - ... - n - 1`; needs `n >= 3`.
    pub fn cycle(n: usize) -> Self {
        let mut edges: Vec<_> = (1..n).map(|k| (k, k + 1)).collect();
        if n >= 3 {
            edges.push((n, 1));
        }
        Self::new(n, &edges).expect("valid cycle")
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Edges as 1-based `(head, tail)`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.edges.iter().map(|&(h, t)| (h + 1, t + 1)).collect()
    }

    /// `+1` at the head and `-1` at the tail of each edge column.
    pub fn incidence(&self) -> DMatrix<i64> {
        self.b_out() - self.b_in()
    }

    pub fn b_out(&self) -> DMatrix<i64> {
        let mut b = DMatrix::zeros(self.num_vertices, self.edges.len());
        for (j, &(h, _)) in self.edges.iter().enumerate() {
            b[(h, j)] = 1;
        }
        b
    }

    pub fn b_in(&self) -> DMatrix<i64> {
        let mut b = DMatrix::zeros(self.num_vertices, self.edges.len());
        for (j, &(_, t)) in self.edges.iter().enumerate() {
            b[(t, j)] = 1;
        }
        b
    }

    /// `E E^T`.
    pub fn laplacian(&self) -> DMatrix<i64> {
        let e = self.incidence();
        &e * e.transpose()
    }

    /// `E^T E`.
    pub fn edge_laplacian(&self) -> DMatrix<i64> {
        let e = self.incidence();
        e.transpose() * e
    }

    /// True when the undirected shadow has no cycle (parallel edges count as one).
    pub fn is_forest(&self) -> bool {
        let mut uf = UnionFind::new(self.num_vertices);
        self.edges.iter().all(|&(h, t)| uf.union(h, t))
    }

    /// Connected components of the undirected shadow, each sorted, ordered by
    /// smallest vertex. Vertices are 0-based.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut uf = UnionFind::new(self.num_vertices);
        for &(h, t) in &self.edges {
            uf.union(h, t);
        }
        let labels = uf.into_labeling();
        let mut out: Vec<Vec<usize>> = Vec::new();
        let mut index = std::collections::HashMap::new();
        for (v, root) in labels.into_iter().enumerate() {
            let k = *index.entry(root).or_insert_with(|| {
                out.push(Vec::new());
                out.len() - 1
            });
            out[k].push(v);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.num_vertices > 0 && self.components().len() == 1
    }
}

pub fn to_real(m: &DMatrix<i64>) -> DMatrix<f64> {
    m.map(|x| x as f64)
}

/// How edge controllers are wired to agents: `K = (L ⊗ I_m) K_e (R ⊗ I_p)`.
#[derive(Clone, Debug, PartialEq)]
pub enum CouplingSpec {
    /// `L = E`, `R = E^T`.
    Incidence(Graph),
    /// `L = F`, `R = F^T` for a ν×μ matrix `F` replacing `E`.
    Custom(DMatrix<f64>),
    /// `L = B_out`, `R = E^T`.
    DirectedOut(Graph),
    /// `L = E`, `R = B_in^T`.
    DirectedIn(Graph),
}

impl CouplingSpec {
    pub fn custom(f: DMatrix<f64>) -> Result<Self> {
        if f.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain(
                "coupling matrix has non-finite entries".into(),
            ));
        }
        Ok(Self::Custom(f))
    }

    pub fn num_agents(&self) -> usize {
        match self {
            Self::Custom(f) => f.nrows(),
            Self::Incidence(g) | Self::DirectedOut(g) | Self::DirectedIn(g) => g.num_vertices(),
        }
    }

    pub fn num_edges(&self) -> usize {
        match self {
            Self::Custom(f) => f.ncols(),
            Self::Incidence(g) | Self::DirectedOut(g) | Self::DirectedIn(g) => g.num_edges(),
        }
    }

    pub fn graph(&self) -> Option<&Graph> {
        match self {
            Self::Custom(_) => None,
            Self::Incidence(g) | Self::DirectedOut(g) | Self::DirectedIn(g) => Some(g),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Incidence(_) => "incidence",
            Self::Custom(_) => "custom",
            Self::DirectedOut(_) => "directed_out",
            Self::DirectedIn(_) => "directed_in",
        }
    }

    /// ν×μ factor applied to the controls.
    pub fn left(&self) -> DMatrix<f64> {
        match self {
            Self::Incidence(g) | Self::DirectedIn(g) => to_real(&g.incidence()),
            Self::Custom(f) => f.clone(),
            Self::DirectedOut(g) => to_real(&g.b_out()),
        }
    }

    /// μ×ν factor applied to the measurements.
    pub fn right(&self) -> DMatrix<f64> {
        match self {
            Self::Incidence(g) | Self::DirectedOut(g) => to_real(&g.incidence()).transpose(),
            Self::Custom(f) => f.transpose(),
            Self::DirectedIn(g) => to_real(&g.b_in()).transpose(),
        }
    }

    /// Vectors `w` with `w^T L = 0`, grouped by support. Each group is a set
    /// of agents that all receive the same null combination of controls; the
    /// input-side (rcf) obstruction is evaluated per group.
    pub fn input_groups(&self, tol: f64) -> Vec<Vec<usize>> {
        let l = self.left();
        support_groups(
            &linalg::left_null_space(&l, tol, Some(linalg::norm2(&l).max(1.0))),
            tol,
        )
    }

    /// Vectors `w` with `R w = 0`, grouped by support; the output-side (lcf)
    /// obstruction is evaluated per group.
    pub fn output_groups(&self, tol: f64) -> Vec<Vec<usize>> {
        let r = self.right();
        support_groups(
            &linalg::null_space(&r, tol, Some(linalg::norm2(&r).max(1.0))),
            tol,
        )
    }
}

/// Supports of the rows of the reduced row-echelon form of `basis^T`.
///
/// For incidence matrices these are exactly the connected components.
fn support_groups(basis: &DMatrix<f64>, tol: f64) -> Vec<Vec<usize>> {
    let mut m = basis.transpose();
    let (rows, cols) = m.shape();
    let mut pivot_row = 0;
    for c in 0..cols {
        if pivot_row == rows {
            break;
        }
        let (best, val) =
            (pivot_row..rows)
                .map(|r| (r, m[(r, c)].abs()))
                .fold(
                    (pivot_row, -1.0),
                    |acc, x| if x.1 > acc.1 { x } else { acc },
                );
        if val <= tol {
            continue;
        }
        m.swap_rows(pivot_row, best);
        let p = m[(pivot_row, c)];
        m.row_mut(pivot_row).scale_mut(1.0 / p);
        for r in 0..rows {
            if r != pivot_row {
                let f = m[(r, c)];
                if f != 0.0 {
                    for k in 0..cols {
                        m[(r, k)] -= f * m[(pivot_row, k)];
                    }
                }
            }
        }
        pivot_row += 1;
    }
    (0..pivot_row)
        .map(|r| {
            (0..cols)
                .filter(|&c| m[(r, c)].abs() > tol.sqrt())
                .collect::<Vec<_>>()
        })
        .filter(|g| !g.is_empty())
        .collect()
}
