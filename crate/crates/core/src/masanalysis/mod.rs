//! Diffusive controllers, four-block closed loops, the shared-direction
//! obstruction and cancellation certificates.

mod cancel;
mod obstruction;

pub use cancel::{cancellation_check, cancellation_check_ss, CancellationReport};
pub use obstruction::{
    stabilizability_obstruction, stabilizability_obstruction_coupled, Blocking, Branch, Candidate,
    StabilizabilityVerdict, Verdict,
};

use nalgebra::DMatrix;
use rand::Rng;

use crate::coprime::{self, CoprimeFactors};
use crate::error::{Error, Result};
use crate::graphnet::{CouplingSpec, Graph};
use crate::linalg::{self, CMatrix};
use crate::ratpoly::{Polynomial, RationalFunction, RationalMatrix};
use crate::ssreal::{minimalize, realize_tol, transfer, StateSpace};
use crate::tol::Tolerances;
use crate::C64;

/// Transfer matrices together with realizations of them.
#[derive(Clone, Debug)]
struct Family {
    tfs: Vec<RationalMatrix>,
    realizations: Vec<StateSpace>,
    rows: usize,
    cols: usize,
}

impl Family {
    fn from_tfs(what: &str, tfs: Vec<RationalMatrix>, tol: f64) -> Result<Self> {
        let (rows, cols) = tfs.first().map_or((0, 0), RationalMatrix::shape);
        let mut realizations = Vec::with_capacity(tfs.len());
        for (i, g) in tfs.iter().enumerate() {
            if g.shape() != (rows, cols) {
                return Err(Error::Dimension(format!(
                    "{what} {} is {}x{}, expected {rows}x{cols}",
                    i + 1,
                    g.rows(),
                    g.cols()
                )));
            }
            let r = realize_tol(g, tol).map_err(|e| match e {
                Error::Domain(msg) => Error::Domain(format!("{what} {}: {msg}", i + 1)),
                other => other,
            })?;
            realizations.push(r);
        }
        Ok(Self {
            tfs,
            realizations,
            rows,
            cols,
        })
    }

    fn from_realizations(what: &str, realizations: Vec<StateSpace>) -> Result<Self> {
        let (rows, cols) = realizations
            .first()
            .map_or((0, 0), |s| (s.outputs(), s.inputs()));
        for (i, s) in realizations.iter().enumerate() {
            if (s.outputs(), s.inputs()) != (rows, cols) {
                return Err(Error::Dimension(format!(
                    "{what} {} is {}x{}, expected {rows}x{cols}",
                    i + 1,
                    s.outputs(),
                    s.inputs()
                )));
            }
        }
        let tfs = realizations.iter().map(transfer).collect();
        Ok(Self {
            tfs,
            realizations,
            rows,
            cols,
        })
    }
}

/// ν agents, each with `m` inputs and `p` outputs.
#[derive(Clone, Debug)]
pub struct AgentSet {
    inner: Family,
}

impl AgentSet {
    pub fn new(agents: Vec<RationalMatrix>) -> Result<Self> {
        Self::with_tol(agents, crate::ratpoly::DEFAULT_TOL)
    }

    pub fn with_tol(agents: Vec<RationalMatrix>, tol: f64) -> Result<Self> {
        if agents.is_empty() {
            return Err(Error::Dimension("at least one agent is required".into()));
        }
        Ok(Self {
            inner: Family::from_tfs("agent", agents, tol)?,
        })
    }

    /// Agents given by (possibly non-minimal) realizations, which are kept
    /// as given so that hidden modes are checked.
    pub fn from_realizations(agents: Vec<StateSpace>) -> Result<Self> {
        if agents.is_empty() {
            return Err(Error::Dimension("at least one agent is required".into()));
        }
        Ok(Self {
            inner: Family::from_realizations("agent", agents)?,
        })
    }

    pub fn len(&self) -> usize {
        self.inner.tfs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inner.tfs.is_empty()
    }

    pub fn inputs(&self) -> usize {
        self.inner.cols
    }

    pub fn outputs(&self) -> usize {
        self.inner.rows
    }

    pub fn agents(&self) -> &[RationalMatrix] {
        &self.inner.tfs
    }

    pub fn realizations(&self) -> &[StateSpace] {
        &self.inner.realizations
    }

    /// `diag{P_i}`.
    pub fn aggregate(&self) -> RationalMatrix {
        RationalMatrix::block_diag(&self.inner.tfs)
    }

    /// Direct sum of the agent realizations; agent `i`'s states come `i`-th.
    pub fn aggregate_realization(&self) -> StateSpace {
        StateSpace::direct_sum(&self.inner.realizations)
    }

    /// All transfer matrices agree with the first one at a few sample points.
    pub fn is_homogeneous(&self, tol: f64) -> bool {
        let pts: Vec<C64> = (0..5)
            .map(|k| C64::from_polar(1.7 + k as f64, 0.4 + 1.1 * k as f64))
            .collect();
        let first = &self.inner.tfs[0];
        self.inner.tfs.iter().all(|g| {
            pts.iter().all(|&z| {
                let (a, b) = (first.eval(z), g.eval(z));
                (&a - &b).norm() <= tol * a.norm().max(1.0)
            })
        })
    }

    pub fn factorize(&self, tol: &Tolerances) -> Result<Vec<CoprimeFactors>> {
        self.inner
            .realizations
            .iter()
            .enumerate()
            .map(|(i, s)| coprime::factorize(s, tol).map_err(|e| e.with_agent(i)))
            .collect()
    }
}

/// μ edge controllers, each `m×p`.
#[derive(Clone, Debug)]
pub struct EdgeControllerSet {
    inner: Family,
}

impl EdgeControllerSet {
    pub fn new(controllers: Vec<RationalMatrix>) -> Result<Self> {
        Ok(Self {
            inner: Family::from_tfs("edge controller", controllers, crate::ratpoly::DEFAULT_TOL)?,
        })
    }

    pub fn from_realizations(controllers: Vec<StateSpace>) -> Result<Self> {
        Ok(Self {
            inner: Family::from_realizations("edge controller", controllers)?,
        })
    }

    /// No edges, for agents with `m` inputs and `p` outputs.
    pub fn empty(m: usize, p: usize) -> Self {
        Self {
            inner: Family {
                tfs: Vec::new(),
                realizations: Vec::new(),
                rows: m,
                cols: p,
            },
        }
    }

    /// `K_e = -I` on every edge; needs `m == p`.
    pub fn consensus(mu: usize, m: usize) -> Self {
        let minus = RationalMatrix::from_constant(&(-DMatrix::<f64>::identity(m, m)));
        let mut out = Self::new(vec![minus; mu]).expect("static controllers realize");
        out.inner.rows = m;
        out.inner.cols = m;
        out
    }

    pub fn len(&self) -> usize {
        self.inner.tfs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inner.tfs.is_empty()
    }

    /// `(m, p)`.
    pub fn shape(&self) -> (usize, usize) {
        (self.inner.rows, self.inner.cols)
    }

    pub fn controllers(&self) -> &[RationalMatrix] {
        &self.inner.tfs
    }

    pub fn realizations(&self) -> &[StateSpace] {
        &self.inner.realizations
    }
}

fn check_assembly(coupling: &CouplingSpec, ke: &EdgeControllerSet) -> Result<()> {
    if ke.len() != coupling.num_edges() {
        return Err(Error::Dimension(format!(
            "{} edge controllers for {} edges",
            ke.len(),
            coupling.num_edges()
        )));
    }
    Ok(())
}

/// `K = (L ⊗ I_m) diag{K_e,j} (R ⊗ I_p)` with the coupling's factors.
pub fn assemble_controller(
    coupling: &CouplingSpec,
    ke: &EdgeControllerSet,
) -> Result<RationalMatrix> {
    check_assembly(coupling, ke)?;
    let (m, p) = ke.shape();
    let (l, r) = (coupling.left(), coupling.right());
    let nu = l.nrows();
    Ok(RationalMatrix::from_fn(nu * m, nu * p, |row, col| {
        let (i, a) = (row / m, row % m);
        let (k, b) = (col / p, col % p);
        let terms = (0..ke.len()).filter_map(|j| {
            let c = l[(i, j)] * r[(j, k)];
            (c != 0.0).then(|| ke.controllers()[j].get(a, b).scale(c))
        });
        exact_sum(terms)
    }))
}

/// Sums rational functions without approximate cancellation: terms with the
/// same denominator share it, the rest are cross-multiplied.
fn exact_sum(terms: impl Iterator<Item = RationalFunction>) -> RationalFunction {
    let mut groups: Vec<(Polynomial, Polynomial, f64)> = Vec::new();
    for t in terms.filter(|t| !t.is_zero()) {
        let size = t.num().norm_inf();
        match groups.iter_mut().find(|g| g.1 == *t.den()) {
            Some(g) => {
                g.0 = &g.0 + t.num();
                g.2 = g.2.max(size);
            }
            None => groups.push((t.num().clone(), t.den().clone(), size)),
        }
    }
    let mut acc = RationalFunction::zero();
    for (num, den, size) in groups {
        // Exact opposites leave rounding residue only.
        if num.norm_inf() <= 1e-14 * size {
            continue;
        }
        let f = RationalFunction::new(num, den).expect("nonzero denominator");
        acc = if acc.is_zero() {
            f
        } else {
            RationalFunction::new(
                &(acc.num() * f.den()) + &(f.num() * acc.den()),
                acc.den() * f.den(),
            )
            .expect("nonzero denominator")
        };
    }
    acc
}

/// State-space version of [`assemble_controller`], before any reduction.
pub fn assemble_controller_ss(
    coupling: &CouplingSpec,
    ke: &EdgeControllerSet,
) -> Result<StateSpace> {
    check_assembly(coupling, ke)?;
    let (m, p) = ke.shape();
    let left = StateSpace::static_gain(linalg::kron_identity(&coupling.left(), m));
    let right = StateSpace::static_gain(linalg::kron_identity(&coupling.right(), p));
    let mid = if ke.is_empty() {
        StateSpace::static_gain(DMatrix::zeros(0, 0))
    } else {
        StateSpace::direct_sum(ke.realizations())
    };
    right.then(&mid)?.then(&left)
}

/// One of the four closed-loop maps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Block {
    /// `d_y -> y`
    S,
    /// `d_u -> y`
    Td,
    /// `d_y -> u`
    Tc,
    /// `d_u -> u`
    T,
}

impl Block {
    pub const ALL: [Block; 4] = [Block::S, Block::Td, Block::Tc, Block::T];

    pub fn name(self) -> &'static str {
        match self {
            Block::S => "S",
            Block::Td => "T_d",
            Block::Tc => "T_c",
            Block::T => "T",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// `T4 = [I; K](I - PK)^{-1}[I P]`, the map `(d_y, d_u) -> (y, u)`.
#[derive(Clone, Debug)]
pub struct ClosedLoop {
    pub s: RationalMatrix,
    pub t_d: RationalMatrix,
    pub t_c: RationalMatrix,
    pub t: RationalMatrix,
    /// Raw interconnection: states are the plant states followed by the
    /// controller states; inputs `(d_y, d_u)`, outputs `(y, u)`.
    pub realization: StateSpace,
    /// Minimal realization of each block, in [`Block::ALL`] order.
    pub blocks: [StateSpace; 4],
    pub block_poles: [Vec<C64>; 4],
    pub stable: bool,
    /// Closed right-half-plane poles over all blocks, clustered.
    pub unstable_poles: Vec<C64>,
    pub plant_order: usize,
    pub controller_order: usize,
    pub plant_outputs: usize,
    pub plant_inputs: usize,
}

impl ClosedLoop {
    pub fn block(&self, b: Block) -> &RationalMatrix {
        match b {
            Block::S => &self.s,
            Block::Td => &self.t_d,
            Block::Tc => &self.t_c,
            Block::T => &self.t,
        }
    }

    pub fn poles(&self, b: Block) -> &[C64] {
        &self.block_poles[b.index()]
    }

    /// Closed right-half-plane poles of one block.
    pub fn unstable_block_poles(&self, b: Block, tol: &Tolerances) -> Vec<C64> {
        self.poles(b)
            .iter()
            .copied()
            .filter(|&z| tol.in_closed_rhp(z))
            .collect()
    }

    /// `T4(s)` from the raw realization.
    pub fn eval(&self, s: C64) -> Result<CMatrix> {
        self.realization.eval(s)
    }
}

/// Feedback interconnection of realizations of `P` and `K`.
pub fn interconnect(p: &StateSpace, k: &StateSpace) -> Result<StateSpace> {
    let (ny, nu) = (p.outputs(), p.inputs());
    if k.inputs() != ny || k.outputs() != nu {
        return Err(Error::Dimension(format!(
            "controller is {}x{}, plant is {ny}x{nu}",
            k.outputs(),
            k.inputs()
        )));
    }
    let (np, nk) = (p.order(), k.order());
    let loop_gain = DMatrix::identity(ny, ny) - p.d() * k.d();
    let ill = || Error::IllPosed("I - D_P D_K is singular".into());
    if ny > 0
        && linalg::min_singular_value(&loop_gain) <= 1e-10 * linalg::norm2(&loop_gain).max(1.0)
    {
        return Err(ill());
    }
    let phi = loop_gain.try_inverse().ok_or_else(ill)?;

    let mut cx = DMatrix::zeros(ny, np + nk);
    cx.view_mut((0, 0), (ny, np)).copy_from(p.c());
    cx.view_mut((0, np), (ny, nk)).copy_from(&(p.d() * k.c()));
    let cy = &phi * cx;
    let mut dx = DMatrix::zeros(ny, ny + nu);
    dx.view_mut((0, 0), (ny, ny)).fill_with_identity();
    dx.view_mut((0, ny), (ny, nu)).copy_from(p.d());
    let dy = &phi * dx;

    let mut cu = k.d() * &cy;
    let mut ck = cu.view_mut((0, np), (nu, nk));
    ck += k.c();
    let du = k.d() * &dy;

    let mut a = linalg::block_diag(&[p.a(), k.a()]);
    let mut top = a.view_mut((0, 0), (np, np + nk));
    top += p.b() * &cu;
    let mut bottom = a.view_mut((np, 0), (nk, np + nk));
    bottom += k.b() * &cy;
    let mut act = du.clone();
    let mut direct = act.view_mut((0, ny), (nu, nu));
    direct += DMatrix::<f64>::identity(nu, nu);
    let mut b = DMatrix::zeros(np + nk, ny + nu);
    b.view_mut((0, 0), (np, ny + nu)).copy_from(&(p.b() * act));
    b.view_mut((np, 0), (nk, ny + nu)).copy_from(&(k.b() * &dy));
    let c = crate::ssreal::stack_rows(&cy, &cu);
    let d = crate::ssreal::stack_rows(&dy, &du);
    Ok(StateSpace::new(a, b, c, d)?.with_tol(p.tol()))
}

/// Four-block closed loop from transfer matrices (realized minimally).
pub fn closed_loop(
    p_agg: &RationalMatrix,
    k: &RationalMatrix,
    tol: &Tolerances,
) -> Result<ClosedLoop> {
    let p = realize_tol(p_agg, tol.rank)?;
    let k = realize_tol(k, tol.rank)?;
    closed_loop_ss(&p, &k, tol)
}

/// Four-block closed loop of the agents under the assembled controller;
/// the plant states are the agents' own states, in order.
pub fn closed_loop_agents(
    agents: &AgentSet,
    coupling: &CouplingSpec,
    ke: &EdgeControllerSet,
    tol: &Tolerances,
) -> Result<ClosedLoop> {
    if coupling.num_agents() != agents.len() {
        return Err(Error::Dimension(format!(
            "coupling has {} vertices for {} agents",
            coupling.num_agents(),
            agents.len()
        )));
    }
    if !ke.is_empty() && ke.shape() != (agents.inputs(), agents.outputs()) {
        return Err(Error::Dimension(format!(
            "edge controllers are {}x{}, agents need {}x{}",
            ke.shape().0,
            ke.shape().1,
            agents.inputs(),
            agents.outputs()
        )));
    }
    let ke = if ke.is_empty() {
        EdgeControllerSet::empty(agents.inputs(), agents.outputs())
    } else {
        ke.clone()
    };
    let k = minimalize(&assemble_controller_ss(coupling, &ke)?.with_tol(tol.rank));
    closed_loop_ss(&agents.aggregate_realization(), &k, tol)
}

pub fn closed_loop_ss(p: &StateSpace, k: &StateSpace, tol: &Tolerances) -> Result<ClosedLoop> {
    let raw = interconnect(p, k)?.with_tol(tol.rank);
    let (ny, nu) = (p.outputs(), p.inputs());
    let ys: Vec<usize> = (0..ny).collect();
    let us: Vec<usize> = (ny..ny + nu).collect();
    let pick = |out: &[usize], inp: &[usize]| minimalize(&raw.select(out, inp));
    let blocks = [
        pick(&ys, &ys),
        pick(&ys, &us),
        pick(&us, &ys),
        pick(&us, &us),
    ];
    let block_poles = blocks.clone().map(|b| b.eigenvalues());
    let all_unstable: Vec<C64> = block_poles
        .iter()
        .flatten()
        .copied()
        .filter(|&z| tol.in_closed_rhp(z))
        .collect();
    let unstable_poles: Vec<C64> = linalg::cluster(&all_unstable, tol.cluster)
        .into_iter()
        .map(|(z, _)| z)
        .collect();
    let tf = |b: &StateSpace| transfer(b).simplify(tol.rank);
    Ok(ClosedLoop {
        s: tf(&blocks[0]),
        t_d: tf(&blocks[1]),
        t_c: tf(&blocks[2]),
        t: tf(&blocks[3]),
        realization: raw,
        stable: unstable_poles.is_empty(),
        unstable_poles,
        blocks,
        block_poles,
        plant_order: p.order(),
        controller_order: k.order(),
        plant_outputs: ny,
        plant_inputs: nu,
    })
}

/// Overall verdict and the closed right-half-plane poles of each block.
pub fn internal_stability(cl: &ClosedLoop, tol: &Tolerances) -> (bool, Vec<(Block, Vec<C64>)>) {
    let report: Vec<(Block, Vec<C64>)> = Block::ALL
        .iter()
        .map(|&b| (b, cl.unstable_block_poles(b, tol)))
        .collect();
    (report.iter().all(|(_, p)| p.is_empty()), report)
}

/// Integrator agents `1/s` under `u_i = -Σ (y_i - y_j)` on `graph`.
pub fn consensus_protocol(graph: &Graph) -> (AgentSet, CouplingSpec, EdgeControllerSet) {
    let integrator = RationalFunction::from_coeffs(&[1.0], &[0.0, 1.0]).expect("1/s");
    let agents = AgentSet::new(vec![
        RationalMatrix::scalar_identity(&integrator, 1);
        graph.num_vertices()
    ])
    .expect("integrators realize");
    let ke = EdgeControllerSet::consensus(graph.num_edges(), 1);
    (agents, CouplingSpec::Incidence(graph.clone()), ke)
}

/// `min σ_min [[M_K, -N_P], [-N_K, M_P]]` over the sample points, from
/// right coprime factors of `P` and `K`. Stays away from zero on the closed
/// right half-plane exactly when the loop is internally stable.
pub fn coprime_loop_margin(
    p: &StateSpace,
    k: &StateSpace,
    points: &[C64],
    tol: &Tolerances,
) -> Result<f64> {
    let fp = coprime::factorize(p, tol)?;
    let fk = coprime::factorize(k, tol)?;
    let (ny, nu) = (p.outputs(), p.inputs());
    let mut worst = f64::INFINITY;
    for &z in points {
        let mut d = CMatrix::zeros(ny + nu, ny + nu);
        d.view_mut((0, 0), (ny, ny)).copy_from(&fk.m.eval(z)?);
        d.view_mut((0, ny), (ny, nu)).copy_from(&(-fp.n.eval(z)?));
        d.view_mut((ny, 0), (nu, ny)).copy_from(&(-fk.n.eval(z)?));
        d.view_mut((ny, ny), (nu, nu)).copy_from(&fp.m.eval(z)?);
        worst = worst.min(linalg::min_singular_value(&d));
    }
    Ok(worst)
}

/// Points on the imaginary axis and in the open right half-plane.
pub fn closed_rhp_samples(count: usize) -> Vec<C64> {
    let mut pts = vec![C64::new(0.0, 0.0)];
    for k in 0..count {
        let w = 10f64.powf(-3.0 + 6.0 * k as f64 / count.max(1) as f64);
        pts.push(C64::new(0.0, w));
        pts.push(C64::new(0.0, -w));
        pts.push(C64::from_polar(w, 0.6));
    }
    pts
}

/// Random first-order `m×p` edge controller with poles in `[-3, -0.5]`
/// (`stable`) or `[0.5, 3]`.
pub fn random_edge_controller(
    rng: &mut impl Rng,
    m: usize,
    p: usize,
    stable: bool,
) -> RationalMatrix {
    RationalMatrix::from_fn(m, p, |_, _| {
        let pole = rng.random_range(0.5..3.0) * if stable { -1.0 } else { 1.0 };
        let b1 = rng.random_range(-2.0..2.0);
        let b0 = rng.random_range(-2.0..2.0);
        RationalFunction::from_coeffs(&[b0, b1], &[-pole, 1.0]).expect("nonzero denominator")
    })
}
