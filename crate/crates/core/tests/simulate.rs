mod common;

use common::*;
use diffstab_core::graphnet::Graph;
use diffstab_core::masanalysis::{closed_loop_agents, consensus_protocol, AgentSet, ClosedLoop};
use diffstab_core::simulate::{
    agreement_metrics, simulate, simulate_agents, slope, Channel, Disturbance, Layout, Scenario,
    Signal, Trajectory,
};
use diffstab_core::{Error, Tolerances};
use proptest::prelude::*;

fn protocol(graph: &Graph) -> (AgentSet, ClosedLoop) {
    let (agents, coupling, ke) = consensus_protocol(graph);
    let cl = closed_loop_agents(&agents, &coupling, &ke, &Tolerances::default()).unwrap();
    (agents, cl)
}

fn scenario(x0: &[f64], t_final: f64, dt: f64, step_at: Option<f64>) -> Scenario {
    Scenario {
        x0: x0.iter().map(|&x| vec![x]).collect(),
        t_final,
        dt,
        disturbances: step_at
            .map(|onset| Disturbance {
                target: 0,
                channel: Channel::Du,
                component: 0,
                signal: Signal::Step {
                    onset,
                    amplitude: 1.0,
                },
            })
            .into_iter()
            .collect(),
    }
}

fn drift_run(dt: f64) -> Trajectory {
    let (agents, cl) = protocol(&Graph::path(4));
    simulate_agents(
        &cl,
        &agents,
        &scenario(&[1.0, 2.0, 3.0, 4.0], 30.0, dt, Some(15.0)),
    )
    .unwrap()
}

#[test]
fn consensus_drift_consensus_then_drift() {
    let traj = drift_run(0.01);
    assert!(!traj.truncated);
    let metrics = agreement_metrics(&traj);
    assert!(metrics.consensus_reached);
    assert!(
        (metrics.value - 2.5).abs() < 1e-3,
        "value {}",
        metrics.value
    );

    let mean = traj.output_mean(0);
    let pts: Vec<(f64, f64)> = traj
        .times
        .iter()
        .zip(&mean)
        .filter(|(t, _)| (20.0..=30.0).contains(*t))
        .map(|(&t, &m)| (t, m))
        .collect();
    assert!((slope(&pts) - 0.25).abs() < 1e-3, "slope {}", slope(&pts));

    let max_u = traj.u.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    assert!(max_u < 5.0, "max |u| = {max_u}");
    // The control settles to nonzero constants while the outputs keep drifting.
    let last = traj.len() - 1;
    let du: f64 = (0..4)
        .map(|c| (traj.u[(last, c)] - traj.u[(last - 100, c)]).abs())
        .sum();
    assert!(du < 1e-2, "{du}");
    assert!(traj.u[(last, 0)].abs() > 0.1);
    assert!(traj.y[(last, 0)] > 5.0);

    let lambda2 = 2.0 - 2f64.sqrt();
    let rel = (metrics.rate_estimate - lambda2).abs() / lambda2;
    assert!(rel < 0.1, "rate {} vs {lambda2}", metrics.rate_estimate);
}

#[test]
fn mean_is_conserved_without_disturbance() {
    let (agents, cl) = protocol(&Graph::star(5));
    let traj = simulate_agents(
        &cl,
        &agents,
        &scenario(&[3.0, -1.0, 0.5, 2.0, 7.0], 10.0, 0.05, None),
    )
    .unwrap();
    for m in traj.output_mean(0) {
        assert!((m - 2.3).abs() < 1e-9, "{m}");
    }
}

#[test]
fn zero_in_zero_out() {
    let (agents, cl) = protocol(&Graph::cycle(3));
    let traj = simulate_agents(&cl, &agents, &scenario(&[0.0; 3], 5.0, 0.1, None)).unwrap();
    assert!(traj
        .y
        .iter()
        .chain(traj.u.iter())
        .chain(&traj.disagreement)
        .all(|&v| v == 0.0));
}

#[test]
fn halving_dt_keeps_the_final_state() {
    let coarse = drift_run(0.02);
    let fine = drift_run(0.01);
    let (a, b) = (coarse.len() - 1, fine.len() - 1);
    assert_eq!(coarse.times[a], fine.times[b]);
    for c in 0..4 {
        assert!((coarse.y[(a, c)] - fine.y[(b, c)]).abs() < 1e-9);
        assert!((coarse.u[(a, c)] - fine.u[(b, c)]).abs() < 1e-9);
    }
}

#[test]
fn onset_between_samples_is_exact() {
    // An onset off the grid is integrated exactly, so grids agree at common instants.
    let (agents, cl) = protocol(&Graph::path(3));
    let a = simulate_agents(
        &cl,
        &agents,
        &scenario(&[1.0, 0.0, -1.0], 4.0, 0.4, Some(1.03)),
    )
    .unwrap();
    let b = simulate_agents(
        &cl,
        &agents,
        &scenario(&[1.0, 0.0, -1.0], 4.0, 0.1, Some(1.03)),
    )
    .unwrap();
    for c in 0..3 {
        assert!((a.y[(a.len() - 1, c)] - b.y[(b.len() - 1, c)]).abs() < 1e-9);
    }
}

#[test]
fn disconnected_graph_does_not_agree() {
    let g = Graph::new(4, &[(1, 2), (3, 4)]).unwrap();
    let (agents, cl) = protocol(&g);
    let traj = simulate_agents(
        &cl,
        &agents,
        &scenario(&[1.0, 2.0, 3.0, 4.0], 20.0, 0.05, None),
    )
    .unwrap();
    let metrics = agreement_metrics(&traj);
    assert!(!metrics.consensus_reached);
    // Each component still averages.
    let last = traj.len() - 1;
    assert!((traj.y[(last, 0)] - 1.5).abs() < 1e-6);
    assert!((traj.y[(last, 3)] - 3.5).abs() < 1e-6);
}

#[test]
fn dy_disturbance_enters_the_measurement() {
    let (agents, cl) = protocol(&Graph::path(2));
    let mut sc = scenario(&[0.0, 0.0], 1.0, 0.1, None);
    sc.disturbances.push(Disturbance {
        target: 1,
        channel: Channel::Dy,
        component: 0,
        signal: Signal::Step {
            onset: 0.0,
            amplitude: 2.0,
        },
    });
    let traj = simulate_agents(&cl, &agents, &sc).unwrap();
    // y_2 = x_2 + d_y at t = 0, and agent 1 is pushed towards it.
    assert!((traj.y[(0, 1)] - 2.0).abs() < 1e-12);
    assert!((traj.u[(0, 0)] - 2.0).abs() < 1e-12);
}

#[test]
fn invalid_scenarios_are_rejected() {
    let (agents, cl) = protocol(&Graph::path(3));
    let layout = Layout::of(&agents);
    let good = scenario(&[1.0, 2.0, 3.0], 1.0, 0.1, Some(0.5));

    let mut bad = good.clone();
    bad.dt = 0.0;
    assert!(matches!(
        simulate(&cl.realization, &layout, &bad),
        Err(Error::Domain(_))
    ));
    let mut bad = good.clone();
    bad.dt = 2.0;
    assert!(simulate(&cl.realization, &layout, &bad).is_err());
    let mut bad = good.clone();
    bad.x0.pop();
    assert!(matches!(
        simulate(&cl.realization, &layout, &bad),
        Err(Error::Dimension(_))
    ));
    let mut bad = good.clone();
    bad.x0[0].push(0.0);
    assert!(matches!(
        simulate(&cl.realization, &layout, &bad),
        Err(Error::Dimension(_))
    ));
    let mut bad = good.clone();
    bad.disturbances[0].target = 3;
    assert!(simulate(&cl.realization, &layout, &bad).is_err());
    let mut bad = good.clone();
    bad.disturbances[0].signal = Signal::Step {
        onset: 1.5,
        amplitude: 1.0,
    };
    assert!(simulate(&cl.realization, &layout, &bad).is_err());

    let other = Layout {
        agents: 4,
        ..layout.clone()
    };
    assert!(matches!(
        simulate(&cl.realization, &other, &good),
        Err(Error::Dimension(_))
    ));
}

#[test]
fn csv_round_trips() {
    let (agents, cl) = protocol(&Graph::path(2));
    let traj = simulate_agents(&cl, &agents, &scenario(&[1.0, 0.3], 1.0, 0.1, None)).unwrap();
    let mut buf = Vec::new();
    traj.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,y_1,y_2,u_1,u_2,disagreement");
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), traj.len());
    for (r, row) in rows.iter().enumerate() {
        assert_eq!(row[0], traj.times[r]);
        assert_eq!(row[1], traj.y[(r, 0)]);
        assert_eq!(row[4], traj.u[(r, 1)]);
        assert_eq!(row[5], traj.disagreement[r]);
    }
}

#[test]
fn unstable_loop_is_truncated_or_grows() {
    // Positive feedback between two integrators diverges.
    let (agents, coupling, ke) = consensus_protocol(&Graph::path(2));
    let ke =
        diffstab_core::masanalysis::EdgeControllerSet::new(vec![ke.controllers()[0].scale(-50.0)])
            .unwrap();
    let cl = closed_loop_agents(&agents, &coupling, &ke, &Tolerances::default()).unwrap();
    let traj = simulate_agents(&cl, &agents, &scenario(&[1.0, -1.0], 40.0, 0.5, None)).unwrap();
    assert!(traj.truncated || traj.disagreement.last().unwrap() > &1e100);
    assert!(traj.disagreement.iter().all(|&d| d >= 0.0 || d.is_nan()));
}

proptest! {
    #![proptest_config(prop_config(24))]

    #[test]
    fn conservation_on_random_graphs(seed in 0u64..10_000, nu in 2usize..6, mu in 1usize..7) {
        let mut r = rng(seed);
        let g = random_graph(&mut r, nu, mu);
        let (agents, cl) = protocol(&g);
        let x0: Vec<f64> = (0..nu).map(|k| (k as f64 * 0.7 + seed as f64).sin()).collect();
        let mean = x0.iter().sum::<f64>() / nu as f64;
        let traj = simulate_agents(&cl, &agents, &scenario(&x0, 3.0, 0.1, None)).unwrap();
        for m in traj.output_mean(0) {
            prop_assert!((m - mean).abs() < 1e-9);
        }
        prop_assert!(traj.disagreement.iter().all(|&d| d >= 0.0));
        prop_assert_eq!(traj.y.nrows(), traj.len());
        prop_assert_eq!(traj.u.nrows(), traj.len());
    }
}
