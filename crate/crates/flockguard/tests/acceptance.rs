//! End-to-end acceptance suite. Each test checks one numbered criterion and
//! prints a single `criterion N (<name>): PASS|FAIL` line (visible with
//! `cargo test -- --nocapture`).

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use nalgebra::Vector3;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use flockguard::controllers::{desired_polygon, u_malicious};
use flockguard::engine::{self, Engine, EventKind};
use flockguard::potentials::{BoundedPotential, LeaderPotential};
use flockguard::scenario;
use flockguard::swarm::{ControlMode, Vector};
use flockguard::topology::{self, ProximityGraph};

fn verdict(n: u32, name: &str, pass: bool) {
    println!("criterion {n} ({name}): {}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {n} ({name}) failed");
}

/// 1000 random polygon configurations with equal velocities balance the
/// malicious control to |u| <= 1e-9 (1 + |k|).
#[test]
fn criterion_1_lemma1_balance() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let radius = 30.0;
    let pot = BoundedPotential::new(radius, 20000.0);
    let mut pass = true;
    for _ in 0..1000 {
        let s = rng.gen_range(2..=8usize);
        let delta_bar = radius * rng.gen_range(1e-3..0.4999);
        let orientation = rng.gen_range(0.0..std::f64::consts::TAU);
        let k_v = rng.gen_range(-10.0..10.0);
        let k_a = rng.gen_range(-10.0..10.0);
        let k_r = rng.gen_range(-1e6..1e6);
        let vel = Vector::from_column_slice(&[rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)]);

        let disp = desired_polygon(s, delta_bar, orientation).unwrap();
        let mut positions = vec![Vector::zeros(2)];
        for d in &disp {
            positions.push(-d);
        }
        let velocities = vec![vel.clone(); positions.len()];
        let graph = topology::build_graph(&positions, radius);
        let u = u_malicious(0, &positions, &velocities, &graph, &pot, k_v, k_a, k_r).unwrap();
        let k_norm = Vector3::new(k_v, k_a, k_r).norm();
        if u.norm() > 1e-9 * (1.0 + k_norm) {
            pass = false;
        }
    }
    pass &= start.elapsed().as_secs_f64() < 2.0;
    verdict(1, "lemma-1 balance", pass);
}

fn central_diff(f: impl Fn(&Vector) -> f64, x: &Vector, h: f64) -> Vector {
    let mut g = Vector::zeros(x.len());
    for c in 0..x.len() {
        let mut hi = x.clone();
        let mut lo = x.clone();
        hi[c] += h;
        lo[c] -= h;
        g[c] = (f(&hi) - f(&lo)) / (2.0 * h);
    }
    g
}

fn grad_close(analytic: &Vector, numeric: &Vector) -> bool {
    (analytic - numeric).norm() <= 1e-6 * analytic.norm().max(numeric.norm()).max(1.0)
}

/// Endpoint values, the minimum at delta, and finite-difference agreement of
/// every analytic gradient at 1000 random points.
#[test]
fn criterion_2_potential_suite() {
    let start = Instant::now();
    let radius = 18.0 * std::f64::consts::SQRT_2;
    let e = 20000.0;
    let pot = BoundedPotential::new(radius, e);
    let mut pass = true;

    pass &= (pot.v_pair(0.0).unwrap().total - e).abs() <= 1e-12 * e;
    pass &= (pot.v_pair(radius).unwrap().total - e).abs() <= 1e-12 * e;
    let delta = pot.delta();
    pass &= (pot.d_attraction(delta) + pot.d_repulsion(delta)).abs() < 1e-10;

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let h = 1e-6 * radius;
    let h_bar = 50.0;
    let iota = 1.0;
    for _ in 0..1000 {
        let d = radius * rng.gen_range(1e-3..(1.0 - 1e-3));
        let theta = rng.gen_range(0.0..std::f64::consts::TAU);
        let x = Vector::from_column_slice(&[d * theta.cos(), d * theta.sin()]);
        let k_a = rng.gen_range(-10.0..10.0);
        let k_r = rng.gen_range(-100.0..100.0);

        let g = pot.grad_v_pair(&x).unwrap();
        let fd = central_diff(|y| pot.v_pair(y.norm()).unwrap().total, &x, h);
        pass &= grad_close(&g, &fd);

        let ga = pot.grad_attraction(&x).unwrap();
        let fda = central_diff(|y| pot.v_pair(y.norm()).unwrap().attraction, &x, h);
        pass &= grad_close(&ga, &fda);

        let gr = pot.grad_repulsion(&x).unwrap();
        let fdr = central_diff(|y| pot.v_pair(y.norm()).unwrap().repulsion, &x, h);
        pass &= grad_close(&gr, &fdr);

        let gt = pot.tilde_v_grad(&x, k_a, k_r).unwrap();
        let fdt = central_diff(
            |y| {
                let p = pot.v_pair(y.norm()).unwrap();
                k_a * p.attraction + k_r * p.repulsion
            },
            &x,
            h,
        );
        pass &= grad_close(&gt, &fdt);

        // Leader potential: keep the sample away from its x* zero where the
        // finite difference loses relative accuracy.
        let star_d = radius * rng.gen_range(0.1..0.8);
        let star_t = rng.gen_range(0.0..std::f64::consts::TAU);
        let x_star = Vector::from_column_slice(&[star_d * star_t.cos(), star_d * star_t.sin()]);
        if (&x - &x_star).norm() < 1e-2 * radius {
            continue;
        }
        let lp = LeaderPotential::new(radius, h_bar, iota, x_star);
        let gl = lp.grad(&x).unwrap();
        let fdl = central_diff(|y| lp.value(y).unwrap(), &x, h);
        pass &= grad_close(&gl, &fdl);
    }
    pass &= start.elapsed().as_secs_f64() < 5.0;
    verdict(2, "potential suite", pass);
}

/// The 13-agent containment scenario settles onto the designed polygon.
#[test]
fn criterion_3_siv_reproduction() {
    let start = Instant::now();
    let record = engine::run(&scenario::siv_fixture()).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let s = &record.summary;
    let mut pass = s.aborted.is_none();
    pass &= s.velocity_spread_final < 0.01 * s.velocity_spread_initial;
    pass &= s.containment.distance_errors.iter().all(|e| *e < 0.5);
    pass &= s.containment.control_residual < 0.05;
    pass &= s.min_distance_over_run > 0.5;
    pass &= s.group_edges_preserved;
    pass &= elapsed < 60.0;
    verdict(3, "containment scenario reproduction", pass);
}

fn h_monotone(cfg: &flockguard::swarm::ScenarioConfig) -> bool {
    let record = engine::run(cfg).unwrap();
    if record.summary.aborted.is_some() {
        return false;
    }
    let h0 = record.metrics[0].energy_h;
    if !(h0 < record.summary.h_bar) {
        return false;
    }
    let eps = 1e-6 * h0.max(1.0);
    record
        .metrics
        .windows(2)
        .all(|w| w[1].energy_h <= w[0].energy_h + eps)
}

/// H(t) is nonincreasing within 1e-6 max(1, H(0)) per step and starts below
/// its analytic ceiling, on the 13-agent scenario and 50 random ones.
#[test]
fn criterion_4_energy_decrease() {
    let mut pass = h_monotone(&scenario::siv_fixture());
    for seed in 0..50u64 {
        pass &= h_monotone(&scenario::random_admissible(seed));
    }
    verdict(4, "energy decrease", pass);
}

fn integrate_to(cfg: &flockguard::swarm::ScenarioConfig, dt: f64, t: f64) -> flockguard::engine::SimState {
    let engine = Engine::new(cfg.clone()).unwrap();
    let mut state = engine.initial_state();
    let steps = (t / dt).round() as usize;
    for _ in 0..steps {
        state = engine.step(&state, dt).unwrap().0;
    }
    state
}

/// The regression identity (v - vF) + CF k = 0 holds to integration order:
/// halving dt shrinks the defect against a fine-reference trajectory at
/// least 8x.
#[test]
fn criterion_5_filter_identity_order() {
    let horizon = 0.2;
    let mut pass = true;
    for seed in 100..110u64 {
        let cfg = scenario::random_admissible(seed);
        let v_ref = integrate_to(&cfg, 2.5e-4, horizon).velocities[cfg.malicious_id].clone();
        let defect = |dt: f64| {
            let state = integrate_to(&cfg, dt, horizon);
            ((&v_ref - &state.estimator.v_filtered) + &state.estimator.c_filtered * cfg.malicious.k())
                .norm()
        };
        let coarse = defect(4e-3);
        let fine = defect(2e-3);
        if !(coarse.is_finite() && fine.is_finite() && coarse >= 8.0 * fine) {
            println!("criterion 5 seed {seed}: coarse {coarse:.3e} fine {fine:.3e}");
            pass = false;
        }
    }
    verdict(5, "filter identity order", pass);
}

/// Random connected follower graph on `n` followers with node `n` as the
/// leader; returns the graph and the follower set.
fn random_follower_graph(rng: &mut ChaCha8Rng) -> (ProximityGraph, BTreeSet<usize>, usize) {
    let n = rng.gen_range(2..10usize);
    let leader = n;
    let mut graph = ProximityGraph::empty(n + 1, 1.0);
    for i in 1..n {
        // Random spanning tree keeps the follower block connected.
        graph.add_edge(i, rng.gen_range(0..i));
    }
    for _ in 0..rng.gen_range(0..n) {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b {
            graph.add_edge(a, b);
        }
    }
    for _ in 0..rng.gen_range(1..=n) {
        graph.add_edge(leader, rng.gen_range(0..n));
    }
    (graph, (0..n).collect(), leader)
}

/// lambda_min(R_j) > 0 on 100 random graphs, and adding edges never lowers
/// it.
#[test]
fn criterion_6_lemma2_spectral() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut pass = true;
    for _ in 0..100 {
        let (graph, followers, leader) = random_follower_graph(&mut rng);
        let base = topology::leader_follower_matrix(&graph, leader, &followers).unwrap();
        if !(base.lambda_min > 1e-12) {
            pass = false;
        }

        let n = followers.len();
        let mut superset = graph.clone();
        for _ in 0..rng.gen_range(1..=3usize) {
            let a = rng.gen_range(0..n);
            let b = rng.gen_range(0..=n);
            if a != b {
                superset.add_edge(a, b);
            }
        }
        let more = topology::leader_follower_matrix(&superset, leader, &followers).unwrap();
        if more.lambda_min < base.lambda_min - 1e-10 {
            pass = false;
        }
    }
    verdict(6, "lemma-2 spectral check", pass);
}

/// With every agent normal the swarm reaches velocity consensus without
/// collisions.
#[test]
fn criterion_7_baseline_sanity() {
    let record = engine::run(&scenario::baseline_fixture()).unwrap();
    let s = &record.summary;
    let pass = s.aborted.is_none()
        && s.velocity_spread_final < 1e-3
        && s.collision_free
        && !record.events.iter().any(|e| e.kind == EventKind::Collision);
    verdict(7, "baseline flocking sanity", pass);
}

/// (a) A lone neighbor is blasted out of sensing range; (b) undefended
/// normals fail the containment check against the same malicious gains.
#[test]
fn criterion_8_negative_controls() {
    let escape = engine::run_forced(&scenario::escape_fixture()).unwrap();
    let escaped = escape.events.iter().any(|e| e.kind == EventKind::Escape);

    let mut undefended = scenario::siv_fixture();
    undefended.control_mode = ControlMode::NormalDefenders;
    let record = engine::run_forced(&undefended).unwrap();
    let uncontained = !record.summary.containment.contained;

    verdict(8, "negative controls", escaped && uncontained);
}

/// Bit-identical reruns; translated and velocity-boosted runs agree on all
/// relative quantities to 1e-9 relative.
#[test]
fn criterion_9_determinism_and_invariance() {
    let mut cfg = scenario::siv_fixture();
    cfg.t_end = 0.05;
    let a = engine::run(&cfg).unwrap();
    let b = engine::run(&cfg).unwrap();
    let mut pass = a == b;

    let rel_close = |x: f64, y: f64| (x - y).abs() <= 1e-9 * x.abs().max(y.abs()).max(1.0);

    let mut shifted = cfg.clone();
    for s in &mut shifted.initial_states {
        s.position[0] += 512.25;
        s.position[1] -= 1024.5;
    }
    let c = engine::run(&shifted).unwrap();
    for (ra, rc) in a.metrics.iter().zip(&c.metrics) {
        pass &= rel_close(ra.energy_h, rc.energy_h);
        pass &= rel_close(ra.min_distance, rc.min_distance);
        pass &= rel_close(ra.containment_residual, rc.containment_residual);
        pass &= rel_close(ra.velocity_spread, rc.velocity_spread);
    }

    let mut boosted = cfg.clone();
    boosted.potential_ceiling = 1e6;
    for s in &mut boosted.initial_states {
        s.velocity[0] += 40.0;
        s.velocity[1] -= 15.0;
    }
    let mut base = cfg.clone();
    base.potential_ceiling = 1e6;
    let d = engine::run(&base).unwrap();
    let e = engine::run(&boosted).unwrap();
    for (rd, re) in d.metrics.iter().zip(&e.metrics) {
        pass &= rel_close(rd.velocity_spread, re.velocity_spread);
        pass &= rel_close(rd.containment_residual, re.containment_residual);
        pass &= rel_close(rd.min_distance, re.min_distance);
    }

    let mut maps: Vec<BTreeMap<usize, f64>> = Vec::new();
    for record in [&a, &c] {
        let last = record.trajectory.last().unwrap();
        let mut dists = BTreeMap::new();
        for j in [2usize, 5, 7, 10] {
            dists.insert(j, (&last.positions[j] - &last.positions[6]).norm());
        }
        maps.push(dists);
    }
    for j in [2usize, 5, 7, 10] {
        pass &= rel_close(maps[0][&j], maps[1][&j]);
    }

    verdict(9, "determinism and invariance", pass);
}
