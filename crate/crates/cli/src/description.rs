//! The JSON system-description format and its validation.
//!
//! Polynomial coefficients are listed in ascending powers of `s`, and every
//! description must say so with `"order": "asc"`. Vertex, agent and channel
//! indices are 1-based.

use std::fmt;

use nalgebra::DMatrix;
use serde::de::{self, Deserializer, SeqAccess, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use diffstab_core::graphnet::{CouplingSpec, Graph};
use diffstab_core::masanalysis::{AgentSet, EdgeControllerSet};
use diffstab_core::ratpoly::{Polynomial, RationalFunction, RationalMatrix};
use diffstab_core::simulate::{Channel, Disturbance, Scenario, Signal};
use diffstab_core::ssreal::{realize_tol, StateSpace};
use diffstab_core::Tolerances;

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Description {
    pub schema: u32,
    pub order: String,
    pub agents: Vec<SystemSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<GraphSpec>,
    #[serde(default)]
    pub coupling: CouplingSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge_controllers: Option<Controllers>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<ScenarioSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<ToleranceSpec>,
}

/// A transfer matrix (`tf`: rows of entries) or a realization (`ss`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemSpec {
    Tf(Vec<Vec<TfEntry>>),
    Ss(SsSpec),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TfEntry {
    pub num: Vec<f64>,
    #[serde(default = "unit_den")]
    pub den: Vec<f64>,
}

fn unit_den() -> Vec<f64> {
    vec![1.0]
}

/// Row-major matrices. `A`, `B`, `C` may be omitted for a static gain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SsSpec {
    #[serde(rename = "A", default)]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B", default)]
    pub b: Vec<Vec<f64>>,
    #[serde(rename = "C", default)]
    pub c: Vec<Vec<f64>>,
    #[serde(rename = "D", default, skip_serializing_if = "Option::is_none")]
    pub d: Option<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub num_vertices: usize,
    pub edges: Vec<[usize; 2]>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingKind {
    #[default]
    Incidence,
    Custom,
    DirectedOut,
    DirectedIn,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingSection {
    pub kind: CouplingKind,
    /// Custom coupling `F`, one row per agent and one column per edge.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
}

/// `"consensus"` (`K_e = -I` on every edge) or one system per edge.
#[derive(Clone, Debug, PartialEq)]
pub enum Controllers {
    Consensus,
    List(Vec<SystemSpec>),
}

impl Serialize for Controllers {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Controllers::Consensus => s.serialize_str("consensus"),
            Controllers::List(v) => v.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for Controllers {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = Controllers;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("\"consensus\" or a list of edge controllers")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Controllers, E> {
                if v == "consensus" {
                    Ok(Controllers::Consensus)
                } else {
                    Err(E::invalid_value(de::Unexpected::Str(v), &self))
                }
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Controllers, A::Error> {
                let mut out = Vec::new();
                while let Some(x) = seq.next_element()? {
                    out.push(x);
                }
                Ok(Controllers::List(out))
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    /// Initial state of each agent's realization; zeros when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<Vec<f64>>>,
    pub t_final: f64,
    pub dt: f64,
    #[serde(default)]
    pub disturbances: Vec<DisturbanceSpec>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelSpec {
    Du,
    Dy,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SignalSpec {
    Zero,
    Step { onset: f64, amplitude: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceSpec {
    pub target: usize,
    pub channel: ChannelSpec,
    #[serde(default = "first")]
    pub component: usize,
    pub signal: SignalSpec,
}

fn first() -> usize {
    1
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rhp: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hurwitz: Option<f64>,
}

/// A validated description, ready for analysis.
#[derive(Clone, Debug)]
pub struct System {
    pub agents: AgentSet,
    pub coupling: CouplingSpec,
    pub controllers: Option<EdgeControllerSet>,
    pub scenario: Option<Scenario>,
    pub tol: Tolerances,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Invalid(msg.into())
}

impl Description {
    /// Parses JSON; syntax and type errors carry line and column.
    pub fn parse(text: &str) -> CliResult<Self> {
        let d: Description =
            serde_json::from_str(text).map_err(|e| invalid(format!("parse error: {e}")))?;
        if d.schema != SCHEMA_VERSION {
            return Err(invalid(format!(
                "schema: unsupported version {}, expected {SCHEMA_VERSION}",
                d.schema
            )));
        }
        if d.order != "asc" {
            return Err(invalid(format!(
                "order: coefficients must be listed in ascending powers of s (\"asc\"), got {:?}",
                d.order
            )));
        }
        Ok(d)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("descriptions serialize")
    }

    /// Tolerances from the file, then `rank_override` on top.
    pub fn tolerances(&self, rank_override: Option<f64>) -> CliResult<Tolerances> {
        let mut tol = Tolerances::default();
        if let Some(t) = &self.tolerances {
            for (name, v, slot) in [
                ("rank", t.rank, &mut tol.rank),
                ("cluster", t.cluster, &mut tol.cluster),
                ("rhp", t.rhp, &mut tol.rhp),
                ("hurwitz", t.hurwitz, &mut tol.hurwitz),
            ] {
                if let Some(v) = v {
                    *slot = positive(v).map_err(|e| e.at(&format!("tolerances.{name}")))?;
                }
            }
        }
        if let Some(r) = rank_override {
            tol.rank = positive(r).map_err(|e| e.at("tolerance override"))?;
        }
        Ok(tol)
    }

    pub fn build(&self, rank_override: Option<f64>) -> CliResult<System> {
        let tol = self.tolerances(rank_override)?;
        if self.agents.is_empty() {
            return Err(invalid("agents: at least one agent is required"));
        }
        let agents = match build_family("agents", &self.agents, tol.rank)? {
            Family::Tf(g) => AgentSet::with_tol(g, tol.rank),
            Family::Ss(s) => AgentSet::from_realizations(s),
        }
        .map_err(|e| CliError::from(e).at("agents"))?;
        let nu = agents.len();
        let coupling = self.build_coupling(nu)?;
        let controllers = self.build_controllers(&agents, &coupling, tol.rank)?;
        let scenario = match &self.scenario {
            Some(s) => Some(build_scenario(s, &agents)?),
            None => None,
        };
        Ok(System {
            agents,
            coupling,
            controllers,
            scenario,
            tol,
        })
    }

    fn graph(&self, nu: usize) -> CliResult<Graph> {
        let Some(g) = &self.graph else {
            return Err(invalid("graph: required for this coupling kind"));
        };
        if g.num_vertices != nu {
            return Err(invalid(format!(
                "graph.num_vertices: {} vertices for {nu} agents",
                g.num_vertices
            )));
        }
        let edges: Vec<(usize, usize)> = g.edges.iter().map(|e| (e[0], e[1])).collect();
        Graph::new(g.num_vertices, &edges).map_err(|e| CliError::from(e).at("graph.edges"))
    }

    fn build_coupling(&self, nu: usize) -> CliResult<CouplingSpec> {
        let c = &self.coupling;
        if c.kind != CouplingKind::Custom && c.matrix.is_some() {
            return Err(invalid(
                "coupling.matrix: only allowed with kind \"custom\"",
            ));
        }
        Ok(match c.kind {
            CouplingKind::Incidence => CouplingSpec::Incidence(self.graph(nu)?),
            CouplingKind::DirectedOut => CouplingSpec::DirectedOut(self.graph(nu)?),
            CouplingKind::DirectedIn => CouplingSpec::DirectedIn(self.graph(nu)?),
            CouplingKind::Custom => {
                let rows = c
                    .matrix
                    .as_ref()
                    .ok_or_else(|| invalid("coupling.matrix: required with kind \"custom\""))?;
                let mu = rows.first().map_or(0, Vec::len);
                let f = matrix("coupling.matrix", rows, nu, mu)?;
                if let Some(g) = &self.graph {
                    if g.num_vertices != nu {
                        return Err(invalid(format!(
                            "graph.num_vertices: {} vertices for {nu} agents",
                            g.num_vertices
                        )));
                    }
                }
                CouplingSpec::custom(f).map_err(|e| CliError::from(e).at("coupling.matrix"))?
            }
        })
    }

    fn build_controllers(
        &self,
        agents: &AgentSet,
        coupling: &CouplingSpec,
        tol: f64,
    ) -> CliResult<Option<EdgeControllerSet>> {
        let (m, p) = (agents.inputs(), agents.outputs());
        let mu = coupling.num_edges();
        let set = match &self.edge_controllers {
            None => return Ok(None),
            Some(Controllers::Consensus) => {
                if m != p {
                    return Err(invalid(format!(
                        "edge_controllers: \"consensus\" needs square agents, these are {p}x{m}"
                    )));
                }
                EdgeControllerSet::consensus(mu, m)
            }
            Some(Controllers::List(list)) => {
                if list.len() != mu {
                    return Err(invalid(format!(
                        "edge_controllers: {} controllers for {mu} edges",
                        list.len()
                    )));
                }
                if list.is_empty() {
                    EdgeControllerSet::empty(m, p)
                } else {
                    match build_family("edge_controllers", list, tol)? {
                        Family::Tf(g) => EdgeControllerSet::new(g),
                        Family::Ss(s) => EdgeControllerSet::from_realizations(s),
                    }
                    .map_err(|e| CliError::from(e).at("edge_controllers"))?
                }
            }
        };
        if !set.is_empty() && set.shape() != (m, p) {
            let (a, b) = set.shape();
            return Err(invalid(format!(
                "edge_controllers: controllers are {a}x{b}, agents need {m}x{p}"
            )));
        }
        Ok(Some(set))
    }
}

fn positive(v: f64) -> CliResult<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(format!("must be positive and finite, got {v}")))
    }
}

enum Family {
    Tf(Vec<RationalMatrix>),
    Ss(Vec<StateSpace>),
}

/// All-`tf` lists stay transfer matrices; any `ss` entry turns the whole
/// list into realizations so that given realizations are kept as they are.
fn build_family(what: &str, specs: &[SystemSpec], tol: f64) -> CliResult<Family> {
    let all_tf = specs.iter().all(|s| matches!(s, SystemSpec::Tf(_)));
    let mut tfs = Vec::new();
    let mut sss = Vec::new();
    for (i, spec) in specs.iter().enumerate() {
        let path = format!("{what}[{}]", i + 1);
        match spec {
            SystemSpec::Tf(rows) => {
                let g = tf_matrix(&path, rows)?;
                if all_tf {
                    tfs.push(g);
                } else {
                    sss.push(realize_tol(&g, tol).map_err(|e| CliError::from(e).at(&path))?);
                }
            }
            SystemSpec::Ss(s) => sss.push(ss_system(&path, s)?),
        }
    }
    Ok(if all_tf {
        Family::Tf(tfs)
    } else {
        Family::Ss(sss)
    })
}

fn tf_matrix(path: &str, rows: &[Vec<TfEntry>]) -> CliResult<RationalMatrix> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || cols == 0 {
        return Err(invalid(format!("{path}.tf: empty transfer matrix")));
    }
    let mut entries = Vec::with_capacity(rows.len() * cols);
    for (r, row) in rows.iter().enumerate() {
        if row.len() != cols {
            return Err(invalid(format!(
                "{path}.tf: row {} has {} entries, expected {cols}",
                r + 1,
                row.len()
            )));
        }
        for (c, e) in row.iter().enumerate() {
            let at = format!("{path}.tf[{}][{}]", r + 1, c + 1);
            if e.num.iter().chain(&e.den).any(|x| !x.is_finite()) {
                return Err(invalid(format!("{at}: coefficients must be finite")));
            }
            let f = RationalFunction::new(
                Polynomial::new(e.num.clone()),
                Polynomial::new(e.den.clone()),
            )
            .map_err(|err| CliError::from(err).at(&at))?;
            if !f.is_proper() {
                return Err(invalid(format!("{at}: improper entry ({f})")));
            }
            entries.push(f);
        }
    }
    RationalMatrix::new(rows.len(), cols, entries).map_err(|e| CliError::from(e).at(path))
}

fn ss_system(path: &str, s: &SsSpec) -> CliResult<StateSpace> {
    let n = s.a.len();
    let (m, p) = match &s.d {
        Some(d) => (d.first().map_or(0, Vec::len), d.len()),
        None if n > 0 => (s.b.first().map_or(0, Vec::len), s.c.len()),
        None => return Err(invalid(format!("{path}.ss: a static system needs D"))),
    };
    let a = matrix(&format!("{path}.ss.A"), &s.a, n, n)?;
    let b = matrix(&format!("{path}.ss.B"), &s.b, n, m)?;
    let c = matrix(&format!("{path}.ss.C"), &s.c, p, n)?;
    let d = match &s.d {
        Some(d) => matrix(&format!("{path}.ss.D"), d, p, m)?,
        None => DMatrix::zeros(p, m),
    };
    StateSpace::new(a, b, c, d).map_err(|e| CliError::from(e).at(&format!("{path}.ss")))
}

/// Row-major `rows` as an `r x c` matrix. With no columns, an empty list
/// and a list of empty rows are both accepted.
fn matrix(path: &str, rows: &[Vec<f64>], r: usize, c: usize) -> CliResult<DMatrix<f64>> {
    if c == 0 && (rows.is_empty() || rows.len() == r) && rows.iter().all(Vec::is_empty) {
        return Ok(DMatrix::zeros(r, 0));
    }
    if rows.len() != r {
        return Err(invalid(format!(
            "{path}: {} rows, expected {r}",
            rows.len()
        )));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != c {
            return Err(invalid(format!(
                "{path}: row {} has {} entries, expected {c}",
                i + 1,
                row.len()
            )));
        }
        if row.iter().any(|x| !x.is_finite()) {
            return Err(invalid(format!(
                "{path}: row {} has a non-finite entry",
                i + 1
            )));
        }
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

fn build_scenario(s: &ScenarioSpec, agents: &AgentSet) -> CliResult<Scenario> {
    if !(s.t_final > 0.0) {
        return Err(CliError::Usage(format!(
            "scenario.t_final: the horizon must be positive, got {}",
            s.t_final
        )));
    }
    if !(s.dt > 0.0 && s.dt <= s.t_final) {
        return Err(invalid(format!(
            "scenario.dt: need 0 < dt <= t_final, got {}",
            s.dt
        )));
    }
    let orders: Vec<usize> = agents
        .realizations()
        .iter()
        .map(StateSpace::order)
        .collect();
    let x0 = match &s.x0 {
        None => orders.iter().map(|&n| vec![0.0; n]).collect(),
        Some(x0) => {
            if x0.len() != orders.len() {
                return Err(invalid(format!(
                    "scenario.x0: {} entries for {} agents",
                    x0.len(),
                    orders.len()
                )));
            }
            for (i, (x, &n)) in x0.iter().zip(&orders).enumerate() {
                if x.len() != n {
                    return Err(invalid(format!(
                        "scenario.x0[{}]: {} entries, agent {} has order {n}",
                        i + 1,
                        x.len(),
                        i + 1
                    )));
                }
            }
            x0.clone()
        }
    };
    let mut disturbances = Vec::with_capacity(s.disturbances.len());
    for (k, d) in s.disturbances.iter().enumerate() {
        let at = format!("scenario.disturbances[{}]", k + 1);
        let (channel, width) = match d.channel {
            ChannelSpec::Du => (Channel::Du, agents.inputs()),
            ChannelSpec::Dy => (Channel::Dy, agents.outputs()),
        };
        if d.target == 0 || d.target > agents.len() {
            return Err(invalid(format!(
                "{at}.target: agent {} does not exist (1..={})",
                d.target,
                agents.len()
            )));
        }
        if d.component == 0 || d.component > width {
            return Err(invalid(format!(
                "{at}.component: channel {} does not exist (1..={width})",
                d.component
            )));
        }
        let signal = match d.signal {
            SignalSpec::Zero => Signal::Zero,
            SignalSpec::Step { onset, amplitude } => {
                if !(0.0..=s.t_final).contains(&onset) || !amplitude.is_finite() {
                    return Err(invalid(format!(
                        "{at}.signal: onset must lie in [0, t_final] and amplitude be finite"
                    )));
                }
                Signal::Step { onset, amplitude }
            }
        };
        disturbances.push(Disturbance {
            target: d.target - 1,
            channel,
            component: d.component - 1,
            signal,
        });
    }
    Ok(Scenario {
        x0,
        t_final: s.t_final,
        dt: s.dt,
        disturbances,
    })
}
