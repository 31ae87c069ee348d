use std::fmt::Write as _;

use serde_json::{json, Value};

use diffstab_core::coprime;
use diffstab_core::linalg;
use diffstab_core::masanalysis::{
    assemble_controller_ss, cancellation_check_ss, closed_loop_agents, closed_rhp_samples,
    internal_stability, stabilizability_obstruction_coupled, Block, Branch, ClosedLoop,
    StabilizabilityVerdict, Verdict,
};
use diffstab_core::simulate::{agreement_metrics, simulate_agents, slope, Trajectory};
use diffstab_core::ssreal::minimalize;
use diffstab_core::{Error as CoreError, C64};

use crate::description::{System, SCHEMA_VERSION};
use crate::error::{CliError, CliResult};
use crate::report::{self, fmt_agents, fmt_c, fmt_list, fmt_vec, sig, Report};

fn verdict_key(v: Verdict) -> &'static str {
    match v {
        Verdict::Obstructed => "obstructed",
        Verdict::NoObstructionFound => "no_obstruction_found",
        Verdict::Stabilizable => "stabilizable",
    }
}

pub fn analyze(sys: &System) -> CliResult<Report> {
    let tol = &sys.tol;
    let agents = &sys.agents;
    let verdict = stabilizability_obstruction_coupled(agents, &sys.coupling, tol)?;

    let mut text = String::new();
    let (m, p) = (agents.inputs(), agents.outputs());
    let homogeneous = agents.is_homogeneous(1e-9);
    let _ = writeln!(
        text,
        "agents: {} ({m} input(s), {p} output(s) each){}",
        agents.len(),
        if homogeneous { ", homogeneous" } else { "" }
    );
    let _ = writeln!(
        text,
        "coupling: {}, {} vertices, {} edges",
        sys.coupling.kind(),
        sys.coupling.num_agents(),
        sys.coupling.num_edges()
    );
    let input_groups = sys.coupling.input_groups(tol.rank);
    let output_groups = sys.coupling.output_groups(tol.rank);
    text.push_str(&verdict_text(&verdict));

    let mut json = json!({
        "schema": SCHEMA_VERSION,
        "command": "analyze",
        "agents": {
            "count": agents.len(),
            "inputs": m,
            "outputs": p,
            "homogeneous": homogeneous,
        },
        "coupling": {
            "kind": sys.coupling.kind(),
            "vertices": sys.coupling.num_agents(),
            "edges": sys.coupling.num_edges(),
            "input_groups": groups_json(&input_groups),
            "output_groups": groups_json(&output_groups),
        },
    });
    let obj = json.as_object_mut().expect("object");
    obj.insert("verdict".into(), verdict_json(&verdict));

    let loop_json = match &sys.controllers {
        None => Value::Null,
        Some(ke) => match closed_loop_agents(agents, &sys.coupling, ke, tol) {
            Err(CoreError::IllPosed(msg)) => {
                let _ = writeln!(
                    text,
                    "closed loop: ill-posed ({msg}), not internally stable"
                );
                json!({ "ill_posed": true, "internally_stable": false, "detail": msg })
            }
            Err(e) => return Err(e.into()),
            Ok(cl) => {
                let k = minimalize(&assemble_controller_ss(&sys.coupling, ke)?.with_tol(tol.rank));
                let plant = agents.aggregate_realization();
                let rhp: Vec<C64> = verdict
                    .poles
                    .iter()
                    .flatten()
                    .map(|r| r.lambda)
                    .filter(|&z| tol.in_closed_rhp(z))
                    .collect();
                let mut cancellations = Vec::new();
                for (lambda, _) in linalg::cluster(&rhp, tol.cluster) {
                    cancellations.push(cancellation_check_ss(&plant, &k, lambda, tol)?);
                }
                let (t, j) = loop_report(&cl, &cancellations, tol);
                text.push_str(&t);
                j
            }
        },
    };
    obj.insert("closed_loop".into(), loop_json);
    Ok(Report { text, json })
}

fn groups_json(groups: &[Vec<usize>]) -> Value {
    Value::Array(
        groups
            .iter()
            .map(|g| json!(g.iter().map(|i| i + 1).collect::<Vec<_>>()))
            .collect(),
    )
}

fn verdict_text(v: &StabilizabilityVerdict) -> String {
    let mut t = String::new();
    let _ = writeln!(t, "verdict: {}", v.verdict.describe());
    for b in &v.blocking {
        let _ = writeln!(
            t,
            "  certificate: lambda = {}, {} side ({}), agents {}",
            fmt_c(b.lambda),
            b.branch.side(),
            b.branch.name(),
            fmt_agents(&b.agents)
        );
        let _ = writeln!(
            t,
            "    direction v = {} (shared subspace of dimension {})",
            fmt_vec(&b.direction),
            b.shared.dim()
        );
        let what = match b.branch {
            Branch::Rcf => "max |v^H M_i(lambda)|",
            Branch::Lcf => "max |M~_i(lambda) v|",
        };
        let _ = writeln!(
            t,
            "    {what} = {}, denominator kernel test {}",
            sig(b.residual),
            if b.kernel_agrees {
                "agrees"
            } else {
                "DISAGREES"
            }
        );
    }
    for c in v.candidates.iter().filter(|c| !c.blocking) {
        let _ = writeln!(
            t,
            "  unstable pole {} of agents {}: no shared direction",
            fmt_c(c.lambda),
            fmt_agents(&c.agents)
        );
    }
    let _ = writeln!(t, "poles:");
    for (i, recs) in v.poles.iter().enumerate() {
        if recs.is_empty() {
            let _ = writeln!(t, "  agent {}: static", i + 1);
        }
        for r in recs {
            let _ = writeln!(
                t,
                "  agent {}: {} (multiplicity {}), input directions {}, output directions {}",
                i + 1,
                fmt_c(r.lambda),
                r.multiplicity,
                dirs_text(r.in_dirs.basis()),
                dirs_text(r.out_dirs.basis())
            );
        }
    }
    t
}

fn dirs_text(b: &linalg::CMatrix) -> String {
    let cols: Vec<String> = (0..b.ncols())
        .map(|j| fmt_vec(&b.column(j).into_owned()))
        .collect();
    format!("{{{}}}", cols.join(", "))
}

fn verdict_json(v: &StabilizabilityVerdict) -> Value {
    let blocking: Vec<Value> = v
        .blocking
        .iter()
        .map(|b| {
            json!({
                "lambda": report::c(b.lambda),
                "branch": b.branch.name(),
                "side": b.branch.side(),
                "agents": b.agents.iter().map(|i| i + 1).collect::<Vec<_>>(),
                "direction": report::cvec(&b.direction),
                "shared": report::subspace(&b.shared),
                "residual": b.residual,
                "kernel_agrees": b.kernel_agrees,
            })
        })
        .collect();
    let candidates: Vec<Value> = v
        .candidates
        .iter()
        .map(|c| {
            json!({
                "lambda": report::c(c.lambda),
                "agents": c.agents.iter().map(|i| i + 1).collect::<Vec<_>>(),
                "blocking": c.blocking,
            })
        })
        .collect();
    let poles: Vec<Value> = v
        .poles
        .iter()
        .map(|recs| {
            Value::Array(
                recs.iter()
                    .map(|r| {
                        json!({
                            "lambda": report::c(r.lambda),
                            "multiplicity": r.multiplicity,
                            "in_dirs": report::subspace(&r.in_dirs),
                            "out_dirs": report::subspace(&r.out_dirs),
                        })
                    })
                    .collect(),
            )
        })
        .collect();
    json!({
        "kind": verdict_key(v.verdict),
        "summary": v.verdict.describe(),
        "stabilizable_by_diffusive": v.stabilizable_by_diffusive(),
        "certificates": blocking,
        "candidates": candidates,
        "poles": poles,
    })
}

fn loop_report(
    cl: &ClosedLoop,
    cancellations: &[diffstab_core::masanalysis::CancellationReport],
    tol: &diffstab_core::Tolerances,
) -> (String, Value) {
    let (stable, unstable) = internal_stability(cl, tol);
    let mut t = String::new();
    let _ = writeln!(
        t,
        "closed loop: {} (plant order {}, controller order {})",
        if stable {
            "internally stable"
        } else {
            "NOT internally stable"
        },
        cl.plant_order,
        cl.controller_order
    );
    let mut blocks = Vec::new();
    for (b, bad) in &unstable {
        let poles = cl.poles(*b);
        let _ = writeln!(t, "  {:<4} poles {}", b.name(), fmt_list(poles));
        if !bad.is_empty() {
            let _ = writeln!(t, "       closed right half-plane: {}", fmt_list(bad));
        }
        blocks.push(json!({
            "name": b.name(),
            "order": cl.blocks[block_index(*b)].order(),
            "poles": report::clist(poles),
            "unstable_poles": report::clist(bad),
        }));
    }
    let mut canc = Vec::new();
    for r in cancellations {
        let _ = writeln!(
            t,
            "  pole {} of the agents: P K degree deficit {}, K P degree deficit {}, multiplicity in P K {} -> {}, in K P {} -> {}{}",
            fmt_c(r.lambda),
            r.degree_deficit,
            r.degree_deficit_kp,
            r.multiplicity_pk.0,
            r.multiplicity_pk.1,
            r.multiplicity_kp.0,
            r.multiplicity_kp.1,
            if r.canceled_in_pk || r.canceled_in_kp { " (canceled)" } else { "" }
        );
        canc.push(json!({
            "lambda": report::c(r.lambda),
            "canceled_in_pk": r.canceled_in_pk,
            "canceled_in_kp": r.canceled_in_kp,
            "degree_deficit": r.degree_deficit,
            "degree_deficit_kp": r.degree_deficit_kp,
            "multiplicity_pk": [r.multiplicity_pk.0, r.multiplicity_pk.1],
            "multiplicity_kp": [r.multiplicity_kp.0, r.multiplicity_kp.1],
            "pbh_left_null": report::subspace(&r.pbh_left_null),
        }));
    }
    let json = json!({
        "ill_posed": false,
        "internally_stable": stable,
        "plant_order": cl.plant_order,
        "controller_order": cl.controller_order,
        "blocks": blocks,
        "unstable_poles": report::clist(&cl.unstable_poles),
        "cancellations": canc,
    });
    (t, json)
}

fn block_index(b: Block) -> usize {
    Block::ALL
        .iter()
        .position(|&x| x == b)
        .expect("known block")
}

/// Simulation summary; the trajectory itself goes to CSV.
pub fn simulate(sys: &System) -> CliResult<(Trajectory, Report)> {
    let ke = sys.controllers.as_ref().ok_or_else(|| {
        CliError::Usage("simulate needs edge_controllers in the description".into())
    })?;
    let sc = sys
        .scenario
        .as_ref()
        .ok_or_else(|| CliError::Usage("simulate needs a scenario in the description".into()))?;
    let cl = closed_loop_agents(&sys.agents, &sys.coupling, ke, &sys.tol)?;
    let traj = simulate_agents(&cl, &sys.agents, sc)?;
    let metrics = agreement_metrics(&traj);
    let max_abs = |m: &nalgebra::DMatrix<f64>| m.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let (max_u, max_y) = (max_abs(&traj.u), max_abs(&traj.y));

    // Mean drift over the last two thirds of the post-disturbance window.
    let drift = traj.onset.and_then(|onset| {
        let end = *traj.times.last()?;
        let from = onset + (end - onset) / 3.0;
        let mean = traj.output_mean(0);
        let pts: Vec<(f64, f64)> = traj
            .times
            .iter()
            .zip(&mean)
            .filter(|(t, _)| **t >= from - 1e-12)
            .map(|(&t, &m)| (t, m))
            .collect();
        (pts.len() >= 2).then(|| slope(&pts))
    });

    let mut text = String::new();
    let _ = writeln!(
        text,
        "samples: {} (dt = {}, t_final = {})",
        traj.len(),
        sc.dt,
        sc.t_final
    );
    let _ = writeln!(
        text,
        "closed loop: {}",
        if cl.stable {
            "internally stable"
        } else {
            "NOT internally stable"
        }
    );
    let _ = writeln!(
        text,
        "consensus reached: {}",
        if metrics.consensus_reached {
            "yes"
        } else {
            "no"
        }
    );
    let _ = writeln!(text, "consensus value: {}", sig(metrics.value));
    let _ = writeln!(
        text,
        "disagreement decay rate: {}",
        sig(metrics.rate_estimate)
    );
    if let Some(d) = drift {
        let _ = writeln!(text, "output mean slope after the disturbance: {}", sig(d));
    }
    let _ = writeln!(text, "max |u| = {}, max |y| = {}", sig(max_u), sig(max_y));
    if traj.truncated {
        let _ = writeln!(
            text,
            "warning: the state diverged and the run was truncated"
        );
    }
    for w in &traj.warnings {
        let _ = writeln!(text, "warning: {w}");
    }
    let json = json!({
        "schema": SCHEMA_VERSION,
        "command": "simulate",
        "samples": traj.len(),
        "dt": sc.dt,
        "t_final": sc.t_final,
        "internally_stable": cl.stable,
        "consensus_reached": metrics.consensus_reached,
        "consensus_value": metrics.value,
        "rate_estimate": metrics.rate_estimate,
        "onset": traj.onset,
        "mean_slope_after_onset": drift,
        "max_abs_u": max_u,
        "max_abs_y": max_y,
        "truncated": traj.truncated,
        "warnings": traj.warnings,
    });
    Ok((traj, Report { text, json }))
}

/// Coprime factors of one agent (1-based index) and the denominators
/// evaluated at `lambdas` (the agent's closed right-half-plane poles when
/// empty).
pub fn factorize(sys: &System, agent: usize, lambdas: &[C64]) -> CliResult<Report> {
    let n = sys.agents.len();
    if agent == 0 || agent > n {
        return Err(CliError::Invalid(format!(
            "--agent: agent {agent} does not exist (1..={n})"
        )));
    }
    let tol = &sys.tol;
    let s = &sys.agents.realizations()[agent - 1];
    let at = format!("agent {agent}");
    let f = coprime::factorize(s, tol).map_err(|e| CliError::from(e).at(&at))?;
    let grid = closed_rhp_samples(33);
    let (bez_r, bez_l) = f.bezout_residuals(&grid)?;
    // Reconstruction evaluates the agent itself, so stay off its poles.
    let eigs = s.eigenvalues();
    let off_poles: Vec<C64> = grid
        .iter()
        .copied()
        .filter(|z| eigs.iter().all(|e| (z - e).norm() > 1e-3))
        .collect();
    let (rec_r, rec_l) = f.reconstruction_residuals(&off_poles)?;
    let factors_stable = f.all_stable(tol.hurwitz);
    let agent_stable = s.is_hurwitz(tol.hurwitz);

    let lambdas: Vec<C64> = if lambdas.is_empty() {
        let rhp: Vec<C64> = s
            .eigenvalues()
            .into_iter()
            .filter(|&z| tol.in_closed_rhp(z))
            .collect();
        linalg::cluster(&rhp, tol.cluster)
            .into_iter()
            .map(|(z, _)| z)
            .collect()
    } else {
        lambdas.to_vec()
    };

    let mut text = String::new();
    let _ = writeln!(
        text,
        "agent {agent}: order {}, {} input(s), {} output(s)",
        s.order(),
        s.inputs(),
        s.outputs()
    );
    let _ = writeln!(text, "state feedback F =");
    text.push_str(&report::fmt_matrix(&f.f, "  "));
    let _ = writeln!(text, "output injection L =");
    text.push_str(&report::fmt_matrix(&f.l, "  "));
    for (name, sys) in [
        ("M", &f.m),
        ("N", &f.n),
        ("M~", &f.m_tilde),
        ("N~", &f.n_tilde),
    ] {
        text.push_str(&report::fmt_ss(name, sys));
    }
    let _ = writeln!(
        text,
        "Bezout residuals on {} points: right {}, left {}",
        grid.len(),
        sig(bez_r),
        sig(bez_l)
    );
    let _ = writeln!(
        text,
        "reconstruction residuals: N M^-1 {}, M~^-1 N~ {}",
        sig(rec_r),
        sig(rec_l)
    );
    let _ = writeln!(
        text,
        "all factors stable: {}",
        if factors_stable { "yes" } else { "no" }
    );
    let _ = writeln!(
        text,
        "M^-1 stable: {}",
        if agent_stable {
            "yes (the agent is stable)"
        } else {
            "no (the agent has unstable poles)"
        }
    );

    let mut evals = Vec::new();
    for &z in &lambdas {
        let mz = f.m.eval(z)?;
        let mtz = f.m_tilde.eval(z)?;
        let (sm, smt) = (
            linalg::min_singular_value(&mz),
            linalg::min_singular_value(&mtz),
        );
        let singular = |sv: f64, m: &linalg::CMatrix| sv <= tol.cluster * linalg::norm2(m).max(1.0);
        let (m_sing, mt_sing) = (singular(sm, &mz), singular(smt, &mtz));
        let _ = writeln!(text, "at lambda = {}:", fmt_c(z));
        let _ = writeln!(text, "  M(lambda) =");
        text.push_str(&report::fmt_cmatrix(&mz, "    "));
        let _ = writeln!(
            text,
            "  sigma_min = {}{}",
            sig(sm),
            if m_sing { " (singular)" } else { "" }
        );
        let _ = writeln!(text, "  M~(lambda) =");
        text.push_str(&report::fmt_cmatrix(&mtz, "    "));
        let _ = writeln!(
            text,
            "  sigma_min = {}{}",
            sig(smt),
            if mt_sing { " (singular)" } else { "" }
        );
        evals.push(json!({
            "lambda": report::c(z),
            "M": report::cmat(&mz),
            "M_sigma_min": sm,
            "M_singular": m_sing,
            "M_tilde": report::cmat(&mtz),
            "M_tilde_sigma_min": smt,
            "M_tilde_singular": mt_sing,
        }));
    }

    let json = json!({
        "schema": SCHEMA_VERSION,
        "command": "factorize",
        "agent": agent,
        "order": s.order(),
        "F": report::mat(&f.f),
        "L": report::mat(&f.l),
        "factors": {
            "M": report::ss(&f.m),
            "N": report::ss(&f.n),
            "M_tilde": report::ss(&f.m_tilde),
            "N_tilde": report::ss(&f.n_tilde),
            "X": report::ss(&f.x),
            "Y": report::ss(&f.y),
            "X_tilde": report::ss(&f.x_tilde),
            "Y_tilde": report::ss(&f.y_tilde),
        },
        "grid_points": grid.len(),
        "bezout_residual": { "right": bez_r, "left": bez_l },
        "reconstruction_residual": { "right": rec_r, "left": rec_l },
        "factors_stable": factors_stable,
        "m_inverse_stable": agent_stable,
        "evaluations": evals,
    });
    Ok(Report { text, json })
}
