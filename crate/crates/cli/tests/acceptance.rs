//! Acceptance criteria 1-7. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use diffstab::commands;
use diffstab::description::{Description, System};
use diffstab::presets;
use diffstab_core::coprime::{denominator_kernel_test, factorize};
use diffstab_core::graphnet::{to_real, CouplingSpec, Graph};
use diffstab_core::linalg::{self, CVector};
use diffstab_core::masanalysis::{
    assemble_controller, assemble_controller_ss, cancellation_check, cancellation_check_ss,
    closed_loop_agents, closed_rhp_samples, internal_stability, random_edge_controller,
    stabilizability_obstruction_coupled, AgentSet, Block, Branch, EdgeControllerSet, Verdict,
};
use diffstab_core::ratpoly::{RationalFunction, RationalMatrix};
use diffstab_core::simulate::{agreement_metrics, slope};
use diffstab_core::ssreal::{
    mcmillan_degree, minimalize, poles, poles_with, subspace_intersect, zero_directions, StateSpace,
};
use diffstab_core::{Error, Tolerances, C64};

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($arg:tt)*) => {
        if !$cond {
            return Err(format!($($arg)*));
        }
    };
}

fn preset(name: &str) -> System {
    Description::parse(presets::get(name).unwrap())
        .unwrap()
        .build(None)
        .unwrap()
}

fn rf(num: &[f64], den: &[f64]) -> RationalFunction {
    RationalFunction::from_coeffs(num, den).unwrap()
}

fn integrator() -> RationalFunction {
    rf(&[1.0], &[0.0, 1.0])
}

fn alpha_beta_agents(alpha: f64, beta: f64) -> AgentSet {
    let z = RationalFunction::zero();
    let p1 = RationalMatrix::new(
        2,
        2,
        vec![integrator(), z.clone(), z, RationalFunction::one()],
    )
    .unwrap();
    let i = integrator();
    let p2 = RationalMatrix::new(
        2,
        2,
        vec![
            i.clone(),
            i.scale(beta),
            i.scale(alpha),
            i.scale(alpha * beta),
        ],
    )
    .unwrap();
    AgentSet::new(vec![p1, p2]).unwrap()
}

fn alpha_beta_controller(alpha: f64, beta: f64) -> EdgeControllerSet {
    let k = DMatrix::from_row_slice(2, 2, &[(alpha - beta) * beta, -alpha, beta, 0.0]);
    EdgeControllerSet::new(vec![RationalMatrix::from_constant(&k)]).unwrap()
}

fn e1() -> CVector {
    CVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)])
}

/// Every value in `got` is matched to a distinct entry of `allowed` within `tol`.
fn sub_multiset(got: &[C64], allowed: &[f64], tol: f64) -> bool {
    let mut used = vec![false; allowed.len()];
    got.iter().all(|z| {
        let hit =
            (0..allowed.len()).find(|&k| !used[k] && (z - C64::new(allowed[k], 0.0)).norm() < tol);
        hit.map(|k| used[k] = true).is_some()
    })
}

fn criterion_1() -> Check {
    let tol = Tolerances::default();
    let sys = preset("alpha-beta");
    let cl = closed_loop_agents(
        &sys.agents,
        &sys.coupling,
        sys.controllers.as_ref().unwrap(),
        &tol,
    )
    .map_err(|e| e.to_string())?;
    let all: Vec<C64> = Block::ALL
        .iter()
        .flat_map(|&b| cl.poles(b).to_vec())
        .collect();
    let distinct = linalg::cluster(&all, 1e-6);
    ensure!(distinct.len() == 2, "pole set {:?}", distinct);
    for target in [-1.0, -4.0] {
        ensure!(
            distinct
                .iter()
                .any(|(z, _)| (z - C64::new(target, 0.0)).norm() < 1e-6),
            "missing pole {target}"
        );
    }
    ensure!(
        internal_stability(&cl, &tol).0,
        "(1, 2) loop not internally stable"
    );

    let path = CouplingSpec::Incidence(Graph::path(2));
    for (alpha, beta, branch) in [(0.0, 2.0, Branch::Lcf), (1.0, 0.0, Branch::Rcf)] {
        let v = stabilizability_obstruction_coupled(&alpha_beta_agents(alpha, beta), &path, &tol)
            .map_err(|e| e.to_string())?;
        ensure!(
            v.verdict == Verdict::Obstructed,
            "({alpha}, {beta}) not obstructed"
        );
        ensure!(
            v.blocking.len() == 1,
            "({alpha}, {beta}) has {} certificates",
            v.blocking.len()
        );
        let b = &v.blocking[0];
        ensure!(
            b.branch == branch,
            "({alpha}, {beta}) on the {} side",
            b.branch.side()
        );
        ensure!(
            b.lambda.norm() < 1e-9 && b.shared.dim() == 1 && b.shared.distance(&e1()) < 1e-9,
            "certificate is not span(e1)"
        );
        ensure!(b.kernel_agrees, "denominator kernel test disagrees");
        let cl = closed_loop_agents(
            &alpha_beta_agents(alpha, beta),
            &path,
            &alpha_beta_controller(alpha, beta),
            &tol,
        )
        .map_err(|e| e.to_string())?;
        ensure!(!cl.stable, "({alpha}, {beta}) loop is stable");
    }
    Ok("(1,2) poles {-1, -4}; alpha=0 fires on the output side, beta=0 on the input side, both span(e1)".into())
}

fn criterion_2() -> Check {
    let tol = Tolerances::default();
    let sys = preset("asymmetric-controller");
    let cl = closed_loop_agents(
        &sys.agents,
        &sys.coupling,
        sys.controllers.as_ref().unwrap(),
        &tol,
    )
    .map_err(|e| e.to_string())?;
    let lcd = [-2.0, -0.5, -0.5, -1.0 / 3.0];
    for b in [Block::S, Block::Td, Block::Tc] {
        ensure!(
            sub_multiset(cl.poles(b), &lcd, 1e-6),
            "{} poles {:?}",
            b.name(),
            cl.poles(b)
        );
    }
    let t = cl.poles(Block::T);
    ensure!(
        t.iter().any(|z| z.norm() < 1e-7),
        "T has no pole at 0: {t:?}"
    );
    let with_origin = [0.0, -2.0, -0.5, -0.5, -1.0 / 3.0];
    ensure!(sub_multiset(t, &with_origin, 1e-6), "T poles {t:?}");
    let (stable, _) = internal_stability(&cl, &tol);
    ensure!(!stable, "reported internally stable");
    Ok(format!(
        "S, T_d, T_c poles within {{-2, -0.5, -0.5, -1/3}}; T has {} poles incl. 0; unstable",
        t.len()
    ))
}

fn criterion_3() -> Check {
    let sys = preset("consensus-drift");
    let (traj, _) = commands::simulate(&sys).map_err(|e| e.to_string())?;
    let m = agreement_metrics(&traj);
    ensure!(
        m.consensus_reached && (m.value - 2.5).abs() < 1e-3,
        "consensus value {}",
        m.value
    );

    let t_d = traj.onset.ok_or("no disturbance onset")?;
    let mean = traj.output_mean(0);
    let pts: Vec<(f64, f64)> = traj
        .times
        .iter()
        .zip(&mean)
        .filter(|(t, _)| **t >= t_d + 5.0 - 1e-9 && **t <= t_d + 15.0 + 1e-9)
        .map(|(&t, &y)| (t, y))
        .collect();
    let s = slope(&pts);
    ensure!((s - 0.25).abs() < 1e-3, "post-disturbance slope {s}");

    let max_u = traj.u.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    ensure!(max_u < 5.0, "max |u| = {max_u}");
    let d0 = traj.disagreement[0];
    ensure!(
        max_u < 10.0 * d0,
        "max |u| not below 10x the initial disagreement"
    );
    let last = traj.len() - 1;
    let at_onset = traj.times.iter().position(|&t| t >= t_d).unwrap();
    ensure!(
        traj.y[(last, 0)] > traj.y[(at_onset, 0)] + 2.0,
        "outputs do not drift"
    );

    let lap = to_real(&Graph::path(4).laplacian());
    let mut eig: Vec<f64> = linalg::eigenvalues(&lap).iter().map(|z| z.re).collect();
    eig.sort_by(f64::total_cmp);
    let lambda2 = eig[1];
    let rel = (m.rate_estimate - lambda2).abs() / lambda2;
    ensure!(
        rel < 0.1,
        "rate {} vs algebraic connectivity {lambda2}",
        m.rate_estimate
    );
    Ok(format!(
        "value {:.6}, slope {:.6}, max|u| {:.3}, rate {:.4} vs {:.4}",
        m.value, s, max_u, m.rate_estimate, lambda2
    ))
}

fn criterion_4() -> Check {
    let tol = Tolerances::default();
    let g1 = RationalMatrix::scalar_identity(&integrator(), 2);
    let g2 = RationalMatrix::from_constant(&DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));
    let product = g2.mul(&g1).map_err(|e| e.to_string())?;
    let deg = mcmillan_degree(&product).map_err(|e| e.to_string())?;
    ensure!(deg == 1, "deg(G2 G1) = {deg}");
    // With P = G1 and K = G2 the cascade G2 G1 is K P.
    let rep = cancellation_check(&g1, &g2, C64::new(0.0, 0.0), &tol).map_err(|e| e.to_string())?;
    ensure!(
        rep.degree_deficit_kp == 1 && rep.canceled_in_kp,
        "deficit {}",
        rep.degree_deficit_kp
    );
    let report = commands::analyze(&preset("cancellation-static")).map_err(|e| e.to_string())?;
    ensure!(
        report.json["closed_loop"]["cancellations"][0]["degree_deficit_kp"] == 1,
        "preset report disagrees"
    );
    Ok("deg(minimal(G2 G1)) = 1, deficit 1 at 0".into())
}

fn criterion_5() -> Check {
    let tol = Tolerances::default();
    let mut systems: Vec<(String, AgentSet, Graph)> = Vec::new();
    for nu in 2..=4 {
        let agents =
            AgentSet::new(vec![RationalMatrix::scalar_identity(&integrator(), 1); nu]).unwrap();
        systems.push((format!("path{nu}"), agents.clone(), Graph::path(nu)));
        systems.push((format!("star{nu}"), agents.clone(), Graph::star(nu)));
        // A two-vertex cycle is the single edge already covered by the path.
        if nu >= 3 {
            systems.push((format!("cycle{nu}"), agents, Graph::cycle(nu)));
        }
    }
    let siso = |num: &[f64], den: &[f64]| RationalMatrix::new(1, 1, vec![rf(num, den)]).unwrap();
    let mixed = AgentSet::new(vec![
        siso(&[1.0], &[0.0, 1.0]),
        siso(&[1.0], &[0.0, 1.0, 1.0]),
        siso(&[3.0, 1.0], &[0.0, -1.0, 1.0]),
    ])
    .unwrap();
    for (name, g) in [
        ("path3", Graph::path(3)),
        ("star3", Graph::star(3)),
        ("cycle3", Graph::cycle(3)),
    ] {
        systems.push((format!("mixed-{name}"), mixed.clone(), g));
    }

    let mut loops = 0;
    let mut counterexamples = Vec::new();
    for (idx, (name, agents, graph)) in systems.iter().enumerate() {
        let coupling = CouplingSpec::Incidence(graph.clone());
        let v = stabilizability_obstruction_coupled(agents, &coupling, &tol)
            .map_err(|e| e.to_string())?;
        let at_origin = v.blocking.iter().any(|b| b.lambda.norm() < 1e-9);
        if v.verdict != Verdict::Obstructed || !at_origin {
            counterexamples.push(format!("{name}: verdict {:?}", v.verdict));
        }
        let mu = graph.num_edges();
        let mut rng = ChaCha8Rng::seed_from_u64(5_000 + idx as u64);
        let mut sets = vec![EdgeControllerSet::consensus(mu, 1)];
        for k in 0..25 {
            let stable = k < 20;
            let ks = (0..mu)
                .map(|_| random_edge_controller(&mut rng, 1, 1, stable))
                .collect();
            sets.push(EdgeControllerSet::new(ks).unwrap());
        }
        for (k, ke) in sets.iter().enumerate() {
            loops += 1;
            match closed_loop_agents(agents, &coupling, ke, &tol) {
                Ok(cl) if internal_stability(&cl, &tol).0 => {
                    counterexamples.push(format!("{name}: controller {k} stabilizes"))
                }
                Ok(_) | Err(Error::IllPosed(_)) => {}
                Err(e) => return Err(format!("{name}: {e}")),
            }
        }
    }
    ensure!(
        counterexamples.is_empty(),
        "{} counterexamples: {:?}",
        counterexamples.len(),
        counterexamples
    );
    Ok(format!(
        "{} systems, {loops} closed loops, 0 counterexamples",
        systems.len()
    ))
}

fn criterion_6() -> Check {
    let tol = Tolerances::default();
    let sys = preset("asymmetric");
    let origin = C64::new(0.0, 0.0);
    let recs: Vec<_> = sys
        .agents
        .realizations()
        .iter()
        .map(|s| {
            poles_with(s, &tol)
                .into_iter()
                .find(|r| r.lambda.norm() < 1e-9)
                .expect("pole at 0")
        })
        .collect();
    let ins: Vec<_> = recs.iter().map(|r| r.in_dirs.clone()).collect();
    let outs: Vec<_> = recs.iter().map(|r| r.out_dirs.clone()).collect();
    let i = subspace_intersect(&ins).map_err(|e| e.to_string())?;
    let o = subspace_intersect(&outs).map_err(|e| e.to_string())?;
    ensure!(!i.is_trivial(), "input directions do not intersect");
    ensure!(o.is_trivial(), "output directions intersect");
    let factors = sys.agents.factorize(&tol).map_err(|e| e.to_string())?;
    let (rcf, lcf) = denominator_kernel_test(&factors, origin, &tol).map_err(|e| e.to_string())?;
    ensure!(
        !rcf.is_trivial() && lcf.is_trivial(),
        "kernel test: rcf {} lcf {}",
        rcf.dim(),
        lcf.dim()
    );
    Ok(format!(
        "input intersection dim {}, output intersection trivial, kernel test agrees",
        i.dim()
    ))
}

fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
}

/// Seed-fixed minimal realization with `n <= 4` and poles on both sides.
fn random_minimal(rng: &mut ChaCha8Rng) -> StateSpace {
    loop {
        let (n, m, p) = (
            rng.random_range(1..=4),
            rng.random_range(1..=2),
            rng.random_range(1..=2),
        );
        let s = StateSpace::new(
            random_matrix(rng, n, n) * 1.5,
            random_matrix(rng, n, m),
            random_matrix(rng, p, n),
            random_matrix(rng, p, m),
        )
        .unwrap();
        if minimalize(&s).order() == n {
            return s;
        }
    }
}

fn hurwitz(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let a = random_matrix(rng, n, n);
    let shift = linalg::eigenvalues(&a)
        .iter()
        .fold(f64::NEG_INFINITY, |x, z| x.max(z.re))
        + 0.5;
    a - DMatrix::identity(n, n) * shift.max(0.0)
}

/// `ν <= 3` agents sharing an unstable pole and one input or output direction.
fn obstructed_instance(rng: &mut ChaCha8Rng) -> (AgentSet, Branch, C64) {
    let nu = rng.random_range(2..=3);
    let (m, p) = (rng.random_range(1..=2), rng.random_range(1..=2));
    let lambda = if rng.random_bool(0.5) {
        0.0
    } else {
        rng.random_range(0.05..0.4)
    };
    let branch = if rng.random_bool(0.5) {
        Branch::Rcf
    } else {
        Branch::Lcf
    };
    let shared_in = random_matrix(rng, 1, m);
    let shared_out = random_matrix(rng, p, 1);
    let agents = (0..nu)
        .map(|_| {
            let ns = rng.random_range(0..=3);
            let n = ns + 1;
            let mut a = DMatrix::zeros(n, n);
            a[(0, 0)] = lambda;
            a.view_mut((1, 1), (ns, ns)).copy_from(&hurwitz(rng, ns));
            let mut b = random_matrix(rng, n, m);
            let mut c = random_matrix(rng, p, n);
            match branch {
                Branch::Rcf => b.row_mut(0).copy_from(&shared_in),
                Branch::Lcf => c.column_mut(0).copy_from(&shared_out),
            }
            StateSpace::new(a, b, c, random_matrix(rng, p, m)).unwrap()
        })
        .collect();
    (
        AgentSet::from_realizations(agents).unwrap(),
        branch,
        C64::new(lambda, 0.0),
    )
}

fn random_connected_graph(rng: &mut ChaCha8Rng, nu: usize) -> Graph {
    let mut edges: Vec<(usize, usize)> = (2..=nu).map(|k| (rng.random_range(1..k), k)).collect();
    for _ in 0..rng.random_range(0..=2) {
        let h = rng.random_range(1..=nu);
        let t = (h % nu) + 1;
        edges.push((h, t));
    }
    Graph::new(nu, &edges).unwrap()
}

fn random_graph(rng: &mut ChaCha8Rng, nu: usize, mu: usize) -> Graph {
    let edges: Vec<(usize, usize)> = (0..mu)
        .map(|_| {
            let h = rng.random_range(1..=nu);
            let mut t = rng.random_range(1..nu);
            if t >= h {
                t += 1;
            }
            (h, t)
        })
        .collect();
    Graph::new(nu, &edges).unwrap()
}

fn blows_up(f: impl Fn(C64) -> f64, lambda: C64) -> bool {
    let dir = C64::from_polar(1.0, 0.7);
    f(lambda + dir * 1e-7) > 30.0 * f(lambda + dir * 1e-4).max(1e-300)
}

fn criterion_7() -> Check {
    const N: usize = 200;
    let tol = Tolerances::default();
    let grid = closed_rhp_samples(33);
    ensure!(grid.len() == 100, "grid has {} points", grid.len());
    let mut rng = ChaCha8Rng::seed_from_u64(7_007);

    // (a), (b), (c) on the same random systems.
    let mut worst_bezout = 0.0f64;
    let mut b3_checks = 0;
    let mut b1_checks = 0;
    for k in 0..N {
        let s = random_minimal(&mut rng);
        let f = factorize(&s, &tol).map_err(|e| format!("(a) instance {k}: {e}"))?;
        let (r, l) = f.bezout_residuals(&grid).map_err(|e| e.to_string())?;
        worst_bezout = worst_bezout.max(r).max(l);
        for rec in poles(&s) {
            let v = rec.in_dirs.representative().unwrap();
            let w = rec.out_dirs.representative().unwrap();
            ensure!(
                blows_up(|z| (s.eval(z).unwrap() * &v).norm(), rec.lambda),
                "(c) instance {k}: input direction loses {}",
                rec.lambda
            );
            ensure!(
                blows_up(|z| (w.adjoint() * s.eval(z).unwrap()).norm(), rec.lambda),
                "(c) instance {k}: output direction loses {}",
                rec.lambda
            );
            b1_checks += 1;
            if !tol.in_closed_rhp(rec.lambda) {
                continue;
            }
            let (_, m_out) = zero_directions(&f.m, rec.lambda, &tol);
            let (mt_in, _) = zero_directions(&f.m_tilde, rec.lambda, &tol);
            ensure!(
                rec.in_dirs.approx_eq(&m_out, 1e-6),
                "(b) instance {k}: input directions at {}",
                rec.lambda
            );
            ensure!(
                rec.out_dirs.approx_eq(&mt_in, 1e-6),
                "(b) instance {k}: output directions at {}",
                rec.lambda
            );
            b3_checks += 1;
        }
    }
    ensure!(worst_bezout < 1e-6, "(a) Bezout residual {worst_bezout:e}");

    // (b) again at poles shared by several agents, and (f).
    let mut obstructed = 0;
    for k in 0..N {
        let (agents, branch, lambda) = obstructed_instance(&mut rng);
        let factors = agents
            .factorize(&tol)
            .map_err(|e| format!("(f) instance {k}: {e}"))?;
        for (s, f) in agents.realizations().iter().zip(&factors) {
            let rec = poles_with(s, &tol)
                .into_iter()
                .find(|r| (r.lambda - lambda).norm() < 1e-6)
                .ok_or("shared pole missing")?;
            let (_, m_out) = zero_directions(&f.m, lambda, &tol);
            let (mt_in, _) = zero_directions(&f.m_tilde, lambda, &tol);
            ensure!(
                rec.in_dirs.approx_eq(&m_out, 1e-6) && rec.out_dirs.approx_eq(&mt_in, 1e-6),
                "(b) shared pole, instance {k}"
            );
            b3_checks += 1;
        }
        let graph = random_connected_graph(&mut rng, agents.len());
        let coupling = CouplingSpec::Incidence(graph.clone());
        let v = stabilizability_obstruction_coupled(&agents, &coupling, &tol)
            .map_err(|e| e.to_string())?;
        if v.verdict != Verdict::Obstructed {
            return Err(format!(
                "(f) instance {k}: constructed obstruction ({}) not detected",
                branch.name()
            ));
        }
        obstructed += 1;
        let (m, p) = (agents.inputs(), agents.outputs());
        let stable = rng.random_bool(0.7);
        let ke = EdgeControllerSet::new(
            (0..graph.num_edges())
                .map(|_| random_edge_controller(&mut rng, m, p, stable))
                .collect(),
        )
        .unwrap();
        let k_ss = assemble_controller_ss(&coupling, &ke).map_err(|e| e.to_string())?;
        let rep = cancellation_check_ss(&agents.aggregate_realization(), &k_ss, lambda, &tol)
            .map_err(|e| format!("(f) instance {k}: {e}"))?;
        ensure!(
            rep.canceled_in_pk || rep.canceled_in_kp,
            "(f) instance {k}: no cancellation at {lambda} (PK {:?}, KP {:?})",
            rep.multiplicity_pk,
            rep.multiplicity_kp
        );
        match closed_loop_agents(&agents, &coupling, &ke, &tol) {
            Ok(cl) => ensure!(
                !internal_stability(&cl, &tol).0,
                "(f) instance {k}: internally stable"
            ),
            Err(Error::IllPosed(_)) => {}
            Err(e) => return Err(format!("(f) instance {k}: {e}")),
        }
    }

    // (d) structural kernel.
    let mut worst_kernel = 0.0f64;
    let pts: Vec<C64> = (0..6)
        .map(|i| C64::from_polar(1.3 + 0.37 * i as f64, 0.45 + 2.1 * i as f64))
        .collect();
    for _ in 0..N {
        let nu = rng.random_range(2..=3);
        let mu = rng.random_range(1..=4);
        let (m, p) = (rng.random_range(1..=2), rng.random_range(1..=2));
        let g = random_graph(&mut rng, nu, mu);
        let ke = EdgeControllerSet::new(
            (0..mu)
                .map(|j| random_edge_controller(&mut rng, m, p, j % 2 == 0))
                .collect(),
        )
        .unwrap();
        let ones = DMatrix::from_element(1, nu, 1.0);
        let left = linalg::to_complex(&linalg::kron_identity(&ones, m));
        let right = linalg::to_complex(&linalg::kron_identity(&ones.transpose(), p));
        for (coupling, check_left, check_right) in [
            (CouplingSpec::Incidence(g.clone()), true, true),
            (CouplingSpec::DirectedOut(g.clone()), false, true),
            (CouplingSpec::DirectedIn(g.clone()), true, false),
        ] {
            let k = assemble_controller(&coupling, &ke).map_err(|e| e.to_string())?;
            for &z in &pts {
                let kz = k.eval(z);
                if check_left {
                    worst_kernel = worst_kernel.max((&left * &kz).norm());
                }
                if check_right {
                    worst_kernel = worst_kernel.max((&kz * &right).norm());
                }
            }
        }
    }
    ensure!(
        worst_kernel < 1e-10,
        "(d) structural kernel residual {worst_kernel:e}"
    );

    // (e) forests 50 random graphs.
    for k in 0..50 {
        let nu = rng.random_range(2..=6);
        let mu = rng.random_range(1..=7);
        let g = random_graph(&mut rng, nu, mu);
        let det = to_real(&g.edge_laplacian()).determinant();
        ensure!(
            g.is_forest() == (det.abs() > 0.5),
            "(e) graph {k}: forest {} det {det}",
            g.is_forest()
        );
    }

    Ok(format!(
        "Bezout max {worst_bezout:.1e}; {b3_checks} direction equalities; {b1_checks} pole retentions; kernel max {worst_kernel:.1e}; {obstructed} obstructed instances all cancel and are unstable"
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Check, Option<f64>); 7] = [
        ("alpha/beta example", criterion_1, Some(1.0)),
        ("asymmetric closed-loop poles", criterion_2, None),
        ("consensus experiment", criterion_3, Some(2.0)),
        ("static cancellation", criterion_4, None),
        ("obstructed battery", criterion_5, Some(30.0)),
        ("asymmetric shared directions", criterion_6, None),
        ("property suites", criterion_7, Some(60.0)),
    ];
    let mut failed = 0;
    for (k, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = run();
        let elapsed = start.elapsed();
        let late = budget.is_some_and(|b| elapsed > Duration::from_secs_f64(b));
        let (status, detail) = match (&result, late) {
            (Ok(d), false) => ("PASS", d.clone()),
            (Ok(d), true) => ("FAIL", format!("{d}; over the {}s budget", budget.unwrap())),
            (Err(e), _) => ("FAIL", e.clone()),
        };
        if status == "FAIL" {
            failed += 1;
        }
        let limit = budget.map_or(String::new(), |b| format!(" / {b}s"));
        println!(
            "criterion {} [{name}]: {status} ({:.2}s{limit}) {detail}",
            k + 1,
            elapsed.as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all 7 criteria passed");
}
