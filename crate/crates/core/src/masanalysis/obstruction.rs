use super::AgentSet;
use crate::coprime::{denominator_kernel_test, CoprimeFactors};
use crate::error::{Error, Result};
use crate::graphnet::CouplingSpec;
use crate::linalg::{self, CVector};
use crate::ssreal::{poles_with, subspace_intersect, PoleRecord, Subspace};
use crate::tol::Tolerances;
use crate::C64;

/// Which side of the loop the shared direction blocks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    /// Shared input direction, `v^H M_i(λ) = 0`.
    Rcf,
    /// Shared output direction, `M̃_i(λ) v = 0`.
    Lcf,
}

impl Branch {
    pub fn name(self) -> &'static str {
        match self {
            Branch::Rcf => "rcf",
            Branch::Lcf => "lcf",
        }
    }

    pub fn side(self) -> &'static str {
        match self {
            Branch::Rcf => "input",
            Branch::Lcf => "output",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// A shared unstable direction rules out every diffusive controller.
    Obstructed,
    /// No shared direction; this alone does not guarantee stabilizability.
    NoObstructionFound,
    /// Every agent is stable, so `K_e = 0` already works.
    Stabilizable,
}

impl Verdict {
    pub fn describe(self) -> &'static str {
        match self {
            Verdict::Obstructed => "NOT diffusively stabilizable",
            Verdict::NoObstructionFound => "no obstruction found",
            Verdict::Stabilizable => "stabilizable (all agents stable)",
        }
    }
}

/// A certificate that no diffusive controller stabilizes the agents.
#[derive(Clone, Debug)]
pub struct Blocking {
    pub lambda: C64,
    pub branch: Branch,
    /// Agents (0-based) over which the direction is shared.
    pub agents: Vec<usize>,
    pub direction: CVector,
    pub shared: Subspace,
    /// The pole direction subspace of each agent in `agents`.
    pub per_agent_dirs: Vec<Subspace>,
    /// `max_i ‖v^H M_i(λ)‖` or `max_i ‖M̃_i(λ) v‖`.
    pub residual: f64,
    /// The denominator-kernel test reaches the same conclusion.
    pub kernel_agrees: bool,
}

/// A closed right-half-plane pole of at least one agent.
#[derive(Clone, Debug)]
pub struct Candidate {
    pub lambda: C64,
    /// Agents (0-based) with a pole here.
    pub agents: Vec<usize>,
    pub blocking: bool,
}

#[derive(Clone, Debug)]
pub struct StabilizabilityVerdict {
    pub verdict: Verdict,
    pub blocking: Vec<Blocking>,
    pub candidates: Vec<Candidate>,
    /// Poles of every agent's minimal realization.
    pub poles: Vec<Vec<PoleRecord>>,
}

impl StabilizabilityVerdict {
    pub fn stabilizable_by_diffusive(&self) -> bool {
        self.verdict != Verdict::Obstructed
    }

    pub fn first_blocking(&self, branch: Branch) -> Option<&Blocking> {
        self.blocking.iter().find(|b| b.branch == branch)
    }
}

/// Shared-direction test with every agent in one group on both sides.
pub fn stabilizability_obstruction(
    agents: &AgentSet,
    tol: &Tolerances,
) -> Result<StabilizabilityVerdict> {
    let all: Vec<usize> = (0..agents.len()).collect();
    run(agents, &[all.clone()], &[all], tol)
}

/// Shared-direction test over the agent groups left unreached by the coupling.
///
/// On the input side a group is the support of a vector `w` with
/// `w^T L = 0`; on the output side, of `w` with `R w = 0`. For a connected
/// graph with incidence coupling both are the whole agent set. Directed
/// couplings only have the whole set on one side.
pub fn stabilizability_obstruction_coupled(
    agents: &AgentSet,
    coupling: &CouplingSpec,
    tol: &Tolerances,
) -> Result<StabilizabilityVerdict> {
    if coupling.num_agents() != agents.len() {
        return Err(Error::Dimension(format!(
            "coupling has {} vertices for {} agents",
            coupling.num_agents(),
            agents.len()
        )));
    }
    run(
        agents,
        &coupling.input_groups(tol.rank),
        &coupling.output_groups(tol.rank),
        tol,
    )
}

fn nearest(records: &[PoleRecord], lambda: C64, radius: f64) -> Option<&PoleRecord> {
    records
        .iter()
        .filter(|r| (r.lambda - lambda).norm() <= radius)
        .min_by(|a, b| {
            (a.lambda - lambda)
                .norm()
                .total_cmp(&(b.lambda - lambda).norm())
        })
}

fn run(
    agents: &AgentSet,
    rcf_groups: &[Vec<usize>],
    lcf_groups: &[Vec<usize>],
    tol: &Tolerances,
) -> Result<StabilizabilityVerdict> {
    let factors = agents.factorize(tol)?;
    let poles: Vec<Vec<PoleRecord>> = agents
        .realizations()
        .iter()
        .map(|s| poles_with(s, tol))
        .collect();
    let unstable: Vec<C64> = poles
        .iter()
        .flatten()
        .map(|r| r.lambda)
        .filter(|&z| tol.in_closed_rhp(z))
        .collect();
    if unstable.is_empty() {
        return Ok(StabilizabilityVerdict {
            verdict: Verdict::Stabilizable,
            blocking: Vec::new(),
            candidates: Vec::new(),
            poles,
        });
    }

    let radius = tol.cluster;
    let mut candidates = Vec::new();
    let mut blocking = Vec::new();
    for (lambda, _) in linalg::cluster(&unstable, tol.cluster) {
        let with: Vec<usize> = (0..agents.len())
            .filter(|&i| nearest(&poles[i], lambda, radius).is_some())
            .collect();
        let before = blocking.len();
        for (branch, groups) in [(Branch::Rcf, rcf_groups), (Branch::Lcf, lcf_groups)] {
            for group in groups {
                if group.is_empty() || !group.iter().all(|i| with.contains(i)) {
                    continue;
                }
                if let Some(b) = check_group(&poles, &factors, group, lambda, branch, tol)? {
                    blocking.push(b);
                }
            }
        }
        candidates.push(Candidate {
            lambda,
            agents: with,
            blocking: blocking.len() > before,
        });
    }
    let verdict = if blocking.is_empty() {
        Verdict::NoObstructionFound
    } else {
        Verdict::Obstructed
    };
    Ok(StabilizabilityVerdict {
        verdict,
        blocking,
        candidates,
        poles,
    })
}

fn check_group(
    poles: &[Vec<PoleRecord>],
    factors: &[CoprimeFactors],
    group: &[usize],
    lambda: C64,
    branch: Branch,
    tol: &Tolerances,
) -> Result<Option<Blocking>> {
    let dirs: Vec<Subspace> = group
        .iter()
        .map(|&i| {
            let rec = nearest(&poles[i], lambda, tol.cluster).expect("agent has the pole");
            match branch {
                Branch::Rcf => rec.in_dirs.clone(),
                Branch::Lcf => rec.out_dirs.clone(),
            }
        })
        .collect();
    let shared = subspace_intersect(&dirs)?;
    let Some(direction) = shared.representative() else {
        return Ok(None);
    };

    let group_factors: Vec<CoprimeFactors> = group.iter().map(|&i| factors[i].clone()).collect();
    let (rcf_hit, lcf_hit) = denominator_kernel_test(&group_factors, lambda, tol)?;
    let kernel_agrees = match branch {
        Branch::Rcf => !rcf_hit.is_trivial(),
        Branch::Lcf => !lcf_hit.is_trivial(),
    };
    let mut residual = 0.0f64;
    for f in &group_factors {
        let r = match branch {
            Branch::Rcf => (direction.adjoint() * f.m.eval(lambda)?).norm(),
            Branch::Lcf => (f.m_tilde.eval(lambda)? * &direction).norm(),
        };
        residual = residual.max(r);
    }
    Ok(Some(Blocking {
        lambda,
        branch,
        agents: group.to_vec(),
        direction,
        shared,
        per_agent_dirs: dirs,
        residual,
        kernel_agrees,
    }))
}
