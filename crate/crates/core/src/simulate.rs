//! Exact zero-order-hold simulation of closed loops under step disturbances.

use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::masanalysis::AgentSet;
use crate::ssreal::StateSpace;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Channel {
    /// Added to the control before it enters the agent.
    Du,
    /// Added to the agent's output before it is measured.
    Dy,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Signal {
    Zero,
    Step { onset: f64, amplitude: f64 },
}

impl Signal {
    fn at(&self, t: f64) -> f64 {
        match *self {
            Signal::Zero => 0.0,
            Signal::Step { onset, amplitude } => {
                if t >= onset {
                    amplitude
                } else {
                    0.0
                }
            }
        }
    }

    fn onset(&self) -> Option<f64> {
        match *self {
            Signal::Zero => None,
            Signal::Step { onset, .. } => Some(onset),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Disturbance {
    /// 0-based agent index.
    pub target: usize,
    pub channel: Channel,
    /// Channel of the agent's input or output (0-based).
    pub component: usize,
    pub signal: Signal,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    /// Initial state of each agent realization; controller states start at 0.
    pub x0: Vec<Vec<f64>>,
    pub t_final: f64,
    pub dt: f64,
    pub disturbances: Vec<Disturbance>,
}

impl Scenario {
    /// First disturbance onset inside the horizon.
    pub fn first_onset(&self) -> Option<f64> {
        self.disturbances
            .iter()
            .filter_map(|d| d.signal.onset())
            .filter(|&t| t <= self.t_final)
            .min_by(f64::total_cmp)
    }
}

/// Where the agents sit in a closed-loop realization.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layout {
    pub agents: usize,
    pub inputs: usize,
    pub outputs: usize,
    pub agent_orders: Vec<usize>,
}

impl Layout {
    pub fn of(agents: &AgentSet) -> Self {
        Self {
            agents: agents.len(),
            inputs: agents.inputs(),
            outputs: agents.outputs(),
            agent_orders: agents
                .realizations()
                .iter()
                .map(StateSpace::order)
                .collect(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// One row per sample, `νp` columns.
    pub y: DMatrix<f64>,
    /// One row per sample, `νm` columns.
    pub u: DMatrix<f64>,
    /// Agent average of the first output channel at the last sample before
    /// the first disturbance (or at the end).
    pub consensus_value: Option<f64>,
    /// `‖y - 1 ⊗ ȳ‖` per sample.
    pub disagreement: Vec<f64>,
    pub outputs_per_agent: usize,
    /// First disturbance onset, if any.
    pub onset: Option<f64>,
    /// The state stopped being finite and the run was cut short.
    pub truncated: bool,
    pub warnings: Vec<String>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Agent average of output channel `k` at every sample.
    pub fn output_mean(&self, k: usize) -> Vec<f64> {
        let p = self.outputs_per_agent;
        let nu = self.y.ncols() / p.max(1);
        (0..self.len())
            .map(|r| (0..nu).map(|i| self.y[(r, i * p + k)]).sum::<f64>() / nu as f64)
            .collect()
    }

    /// Index of the last sample strictly before the first onset.
    fn pre_disturbance_end(&self) -> usize {
        match self.onset {
            Some(t) => self.times.iter().rposition(|&s| s < t).unwrap_or(0),
            None => self.len().saturating_sub(1),
        }
    }

    /// `t,y_1..,u_1..,disagreement`, shortest round-trip decimals.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        let mut header = vec!["t".to_string()];
        header.extend((1..=self.y.ncols()).map(|k| format!("y_{k}")));
        header.extend((1..=self.u.ncols()).map(|k| format!("u_{k}")));
        header.push("disagreement".into());
        writeln!(w, "{}", header.join(","))?;
        for r in 0..self.len() {
            let mut row = vec![self.times[r].to_string()];
            row.extend(self.y.row(r).iter().map(f64::to_string));
            row.extend(self.u.row(r).iter().map(f64::to_string));
            row.push(self.disagreement[r].to_string());
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// `(e^{A h}, ∫_0^h e^{A s} ds B)` from one exponential of the augmented matrix.
fn discretize(a: &DMatrix<f64>, b: &DMatrix<f64>, h: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let (n, m) = (a.nrows(), b.ncols());
    let mut aug = DMatrix::zeros(n + m, n + m);
    aug.view_mut((0, 0), (n, n)).copy_from(&(a * h));
    aug.view_mut((0, n), (n, m)).copy_from(&(b * h));
    let e = aug.exp();
    (
        e.view((0, 0), (n, n)).into_owned(),
        e.view((0, n), (n, m)).into_owned(),
    )
}

fn validate(sys: &StateSpace, layout: &Layout, sc: &Scenario) -> Result<()> {
    let (nu, m, p) = (layout.agents, layout.inputs, layout.outputs);
    let channels = nu * (m + p);
    if sys.inputs() != channels || sys.outputs() != channels {
        return Err(Error::Dimension(format!(
            "closed loop has {} inputs and {} outputs, layout needs {channels}",
            sys.inputs(),
            sys.outputs()
        )));
    }
    let plant: usize = layout.agent_orders.iter().sum();
    if layout.agent_orders.len() != nu || plant > sys.order() {
        return Err(Error::Dimension(
            "agent orders do not fit the closed-loop state".into(),
        ));
    }
    if !(sc.dt > 0.0 && sc.dt.is_finite() && sc.t_final.is_finite() && sc.dt <= sc.t_final) {
        return Err(Error::Domain(format!(
            "need 0 < dt <= t_final, got dt={} t_final={}",
            sc.dt, sc.t_final
        )));
    }
    if sc.x0.len() != nu {
        return Err(Error::Dimension(format!(
            "x0 has {} entries for {nu} agents",
            sc.x0.len()
        )));
    }
    for (i, (x, &n)) in sc.x0.iter().zip(&layout.agent_orders).enumerate() {
        if x.len() != n {
            return Err(Error::Dimension(format!(
                "x0 of agent {} has {} entries, agent order is {n}",
                i + 1,
                x.len()
            )));
        }
    }
    for (k, d) in sc.disturbances.iter().enumerate() {
        let width = match d.channel {
            Channel::Du => m,
            Channel::Dy => p,
        };
        if d.target >= nu || d.component >= width {
            return Err(Error::Domain(format!(
                "disturbance {}: no such agent channel",
                k + 1
            )));
        }
        if let Some(t) = d.signal.onset() {
            if !(0.0..=sc.t_final).contains(&t) {
                return Err(Error::Domain(format!(
                    "disturbance {}: onset {t} outside [0, t_final]",
                    k + 1
                )));
            }
        }
    }
    Ok(())
}

/// Samples `(y, u)` of the closed loop at multiples of `dt`.
///
/// `sys` is the raw interconnection with inputs `(d_y, d_u)` and outputs
/// `(y, u)`; its first states are the agents' states in order.
pub fn simulate(sys: &StateSpace, layout: &Layout, sc: &Scenario) -> Result<Trajectory> {
    validate(sys, layout, sc)?;
    let (nu, m, p) = (layout.agents, layout.inputs, layout.outputs);
    let n = sys.order();
    let mut warnings = Vec::new();
    let fastest = sys
        .eigenvalues()
        .iter()
        .fold(0.0f64, |a, z| a.max(z.re.abs()));
    if fastest > 0.0 && sc.dt > 0.1 / fastest {
        warnings.push(format!(
            "dt = {} is coarse for the fastest mode (|Re| = {fastest:.3e})",
            sc.dt
        ));
    }

    let input_at = |t: f64| {
        let mut w = DVector::zeros(nu * (p + m));
        for d in &sc.disturbances {
            let k = match d.channel {
                Channel::Dy => d.target * p + d.component,
                Channel::Du => nu * p + d.target * m + d.component,
            };
            w[k] += d.signal.at(t);
        }
        w
    };
    let mut onsets: Vec<f64> = sc
        .disturbances
        .iter()
        .filter_map(|d| d.signal.onset())
        .collect();
    onsets.sort_by(f64::total_cmp);

    let mut x = DVector::zeros(n);
    let mut offset = 0;
    for x0 in &sc.x0 {
        x.rows_mut(offset, x0.len()).copy_from_slice(x0);
        offset += x0.len();
    }

    let steps = (sc.t_final / sc.dt + 1e-9).floor() as usize;
    let (phi, gamma) = discretize(sys.a(), sys.b(), sc.dt);
    let mut times = Vec::with_capacity(steps + 1);
    let mut rows: Vec<DVector<f64>> = Vec::with_capacity(steps + 1);
    let mut truncated = false;
    for k in 0..=steps {
        let t = k as f64 * sc.dt;
        let out = sys.c() * &x + sys.d() * input_at(t);
        if out.iter().chain(x.iter()).any(|v| !v.is_finite()) {
            truncated = true;
            break;
        }
        times.push(t);
        rows.push(out);
        if k == steps {
            break;
        }
        let t_next = t + sc.dt;
        let inside: Vec<f64> = onsets
            .iter()
            .copied()
            .filter(|&o| o > t && o < t_next)
            .collect();
        if inside.is_empty() {
            x = &phi * &x + &gamma * input_at(t);
        } else {
            let mut s = t;
            for cut in inside.into_iter().chain(std::iter::once(t_next)) {
                let (ph, ga) = discretize(sys.a(), sys.b(), cut - s);
                x = ph * &x + ga * input_at(s);
                s = cut;
            }
        }
    }

    let samples = times.len();
    let mut y = DMatrix::zeros(samples, nu * p);
    let mut u = DMatrix::zeros(samples, nu * m);
    let mut disagreement = Vec::with_capacity(samples);
    for (r, out) in rows.iter().enumerate() {
        for c in 0..nu * p {
            y[(r, c)] = out[c];
        }
        for c in 0..nu * m {
            u[(r, c)] = out[nu * p + c];
        }
        let mut sq = 0.0;
        for ch in 0..p {
            let mean = (0..nu).map(|i| out[i * p + ch]).sum::<f64>() / nu as f64;
            sq += (0..nu)
                .map(|i| (out[i * p + ch] - mean).powi(2))
                .sum::<f64>();
        }
        disagreement.push(sq.sqrt());
    }

    let mut traj = Trajectory {
        times,
        y,
        u,
        consensus_value: None,
        disagreement,
        outputs_per_agent: p,
        onset: sc.first_onset(),
        truncated,
        warnings,
    };
    if p > 0 && !traj.is_empty() {
        let end = traj.pre_disturbance_end();
        traj.consensus_value = Some(traj.output_mean(0)[end]);
    }
    Ok(traj)
}

/// Simulation of agents under an assembled closed loop.
pub fn simulate_agents(
    cl: &crate::masanalysis::ClosedLoop,
    agents: &AgentSet,
    sc: &Scenario,
) -> Result<Trajectory> {
    simulate(&cl.realization, &Layout::of(agents), sc)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AgreementMetrics {
    pub consensus_reached: bool,
    pub value: f64,
    /// Decay rate of the disagreement from a log-linear fit.
    pub rate_estimate: f64,
}

/// Agreement before the first disturbance.
///
/// The rate is fitted on the last three quarters of the pre-disturbance
/// window, above a noise floor, so that fast transients do not bias it.
pub fn agreement_metrics(traj: &Trajectory) -> AgreementMetrics {
    if traj.is_empty() {
        return AgreementMetrics {
            consensus_reached: false,
            value: f64::NAN,
            rate_estimate: f64::NAN,
        };
    }
    let end = traj.pre_disturbance_end();
    let d0 = traj.disagreement[0];
    let consensus_reached = traj.disagreement[end] <= 1e-3 * d0 || traj.disagreement[end] == 0.0;
    let value = traj.consensus_value.unwrap_or(f64::NAN);

    let t_start = traj.times[0] + 0.25 * (traj.times[end] - traj.times[0]);
    let floor = 1e-10 * d0.max(f64::MIN_POSITIVE);
    let pts: Vec<(f64, f64)> = (0..=end)
        .filter(|&r| traj.times[r] >= t_start && traj.disagreement[r] > floor)
        .map(|r| (traj.times[r], traj.disagreement[r].ln()))
        .collect();
    let rate_estimate = if pts.len() >= 2 {
        -slope(&pts)
    } else {
        f64::NAN
    };
    AgreementMetrics {
        consensus_reached,
        value,
        rate_estimate,
    }
}

/// Least-squares slope of `y` against `x`.
pub fn slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
