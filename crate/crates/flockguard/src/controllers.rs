//! The four control laws of the swarm: the conventional flocking law, the
//! malicious falsified law, the geometric containment law of the leaders,
//! and the adaptive sliding-gain law of the followers, together with the
//! regressor that factors the malicious dynamics as `-C k`.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use nalgebra::{DMatrix, Vector3};

use crate::potentials::{BoundedPotential, LeaderPotential};
use crate::swarm::{EdgeMap, Vector};
use crate::topology::ProximityGraph;
use crate::{Error, Result};

/// The `m x 3` regressor `C_{i_f}` of the malicious dynamics
/// `dv_{i_f}/dt = -C_{i_f} (k_v, k_a, k_r)^T`. Columns are the stacked
/// velocity differences, attraction gradients, and repulsion gradients over
/// the malicious agent's neighborhood.
#[derive(Debug, Clone, PartialEq)]
pub struct Regressor {
    pub matrix: DMatrix<f64>,
}

impl Regressor {
    pub fn zeros(dim: usize) -> Self {
        Self {
            matrix: DMatrix::zeros(dim, 3),
        }
    }

    /// `C k` for a gain vector `k`.
    pub fn apply(&self, k: &Vector3<f64>) -> Vector {
        &self.matrix * Vector::from_column_slice(k.as_slice())
    }
}

/// Conventional flocking law: velocity alignment plus potential descent over
/// the neighborhood.
pub fn u_normal(
    i: usize,
    positions: &[Vector],
    velocities: &[Vector],
    graph: &ProximityGraph,
    pot: &BoundedPotential,
) -> Result<Vector> {
    let dim = positions[i].len();
    let mut u = Vector::zeros(dim);
    for j in graph.neighbors(i) {
        u -= &velocities[i] - &velocities[j];
        u -= pot.grad_v_pair(&(&positions[i] - &positions[j])).map_err(|_| singular(i, j, positions, pot))?;
    }
    Ok(u)
}

/// Falsified law of the malicious agent: the velocity term is scaled by
/// `k_v` and the potential is replaced by `k_a V_a + k_r V_r`.
pub fn u_malicious(
    i_f: usize,
    positions: &[Vector],
    velocities: &[Vector],
    graph: &ProximityGraph,
    pot: &BoundedPotential,
    k_v: f64,
    k_a: f64,
    k_r: f64,
) -> Result<Vector> {
    let dim = positions[i_f].len();
    let mut u = Vector::zeros(dim);
    for j in graph.neighbors(i_f) {
        u -= (&velocities[i_f] - &velocities[j]) * k_v;
        u -= pot
            .tilde_v_grad(&(&positions[i_f] - &positions[j]), k_a, k_r)
            .map_err(|_| singular(i_f, j, positions, pot))?;
    }
    Ok(u)
}

/// Regressor of the malicious dynamics at the current state:
/// `u_malicious = -C (k_v, k_a, k_r)^T` holds exactly.
pub fn regressor(
    i_f: usize,
    positions: &[Vector],
    velocities: &[Vector],
    graph: &ProximityGraph,
    pot: &BoundedPotential,
) -> Result<Regressor> {
    let dim = positions[i_f].len();
    let mut c = DMatrix::zeros(dim, 3);
    for j in graph.neighbors(i_f) {
        let dv = &velocities[i_f] - &velocities[j];
        let x_ij = &positions[i_f] - &positions[j];
        let ga = pot.grad_attraction(&x_ij).map_err(|_| singular(i_f, j, positions, pot))?;
        let gr = pot.grad_repulsion(&x_ij).map_err(|_| singular(i_f, j, positions, pot))?;
        for r in 0..dim {
            c[(r, 0)] += dv[r];
            c[(r, 1)] += ga[r];
            c[(r, 2)] += gr[r];
        }
    }
    Ok(Regressor { matrix: c })
}

fn singular(i: usize, j: usize, positions: &[Vector], pot: &BoundedPotential) -> Error {
    Error::SingularDistance {
        i,
        j,
        dist: (&positions[i] - &positions[j]).norm(),
        radius: pot.radius,
    }
}

/// Displacements `x*_{i_f j}` of a regular polygon of `s` vertices at radius
/// `delta_bar`, the first vertex at angle `orientation`. The returned
/// vectors sum to zero and all have magnitude `delta_bar`; the implied
/// leader separations stay below `2 delta_bar`.
pub fn desired_polygon(s: usize, delta_bar: f64, orientation: f64) -> Result<Vec<Vector>> {
    if s < 2 {
        return Err(Error::PolygonTooSmall(s));
    }
    Ok((0..s)
        .map(|t| {
            let theta = orientation + TAU * t as f64 / s as f64;
            // x*_{i_f j} = x_{i_f} - x_j points from the vertex to the center.
            Vector::from_column_slice(&[-delta_bar * theta.cos(), -delta_bar * theta.sin()])
        })
        .collect())
}

/// Desired geometry of the leader group: displacements `x*_{i_f j}` keyed by
/// leader id, plus the leader-potential parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LeaderShape {
    pub malicious: usize,
    pub displacements: BTreeMap<usize, Vector>,
    pub radius: f64,
    pub h_bar: f64,
    pub iota: f64,
}

impl LeaderShape {
    /// Desired position of agent `a` relative to the malicious agent.
    fn rel_desired(&self, a: usize) -> Result<Vector> {
        if a == self.malicious {
            let dim = self.displacements.values().next().map_or(2, |v| v.len());
            Ok(Vector::zeros(dim))
        } else {
            self.displacements
                .get(&a)
                .map(|d| -d)
                .ok_or(Error::MissingDisplacement(a))
        }
    }

    /// Leader potential of the pair `(a, b)` within the group, carrying
    /// `x*_{ab}`.
    pub fn pair_potential(&self, a: usize, b: usize) -> Result<LeaderPotential> {
        let x_star = self.rel_desired(a)? - self.rel_desired(b)?;
        Ok(LeaderPotential::new(self.radius, self.h_bar, self.iota, x_star))
    }
}

/// Containment law of leader `j`: velocity consensus and shape descent over
/// the group neighbors (malicious agent included), plus the estimated
/// compensation `-C k_hat` that mirrors the malicious acceleration.
#[allow(clippy::too_many_arguments)]
pub fn u_leader(
    j: usize,
    positions: &[Vector],
    velocities: &[Vector],
    graph: &ProximityGraph,
    group: &std::collections::BTreeSet<usize>,
    shape: &LeaderShape,
    kappa_v: f64,
    kappa_x: f64,
    regressor: &Regressor,
    k_hat: &Vector3<f64>,
) -> Result<Vector> {
    let dim = positions[j].len();
    let mut u = Vector::zeros(dim);
    for p in graph.neighbors(j) {
        if !group.contains(&p) {
            continue;
        }
        u -= (&velocities[j] - &velocities[p]) * kappa_v;
        let pot = shape.pair_potential(j, p)?;
        u -= pot.grad(&(&positions[j] - &positions[p])).map_err(|e| match e {
            Error::SingularDistance { dist, radius, .. } => Error::SingularDistance {
                i: j,
                j: p,
                dist,
                radius,
            },
            other => other,
        })? * kappa_x;
    }
    u -= regressor.apply(k_hat);
    Ok(u)
}

/// Component-wise signum with a deadband: zero inside `[-deadband, deadband]`.
pub fn sgn_deadband(z: &Vector, deadband: f64) -> Vector {
    z.map(|c| {
        if c > deadband {
            1.0
        } else if c < -deadband {
            -1.0
        } else {
            0.0
        }
    })
}

/// Adaptive law of follower `k`: sliding velocity consensus with the varying
/// gains `alpha_kp` plus potential descent. Also returns the gain rates
/// `d(alpha_kp)/dt = gamma_kp |v_k - v_p|_1` keyed by neighbor.
#[allow(clippy::too_many_arguments)]
pub fn u_follower(
    k: usize,
    positions: &[Vector],
    velocities: &[Vector],
    graph: &ProximityGraph,
    pot: &BoundedPotential,
    alpha: &dyn Fn(usize, usize) -> f64,
    gamma: &EdgeMap,
    deadband: f64,
) -> Result<(Vector, BTreeMap<usize, f64>)> {
    let dim = positions[k].len();
    let mut u = Vector::zeros(dim);
    let mut alpha_dot = BTreeMap::new();
    for p in graph.neighbors(k) {
        let dv = &velocities[k] - &velocities[p];
        u -= sgn_deadband(&dv, deadband) * alpha(k, p);
        u -= pot.grad_v_pair(&(&positions[k] - &positions[p])).map_err(|_| singular(k, p, positions, pot))?;
        alpha_dot.insert(p, gamma.get(k, p) * dv.lp_norm(1));
    }
    Ok((u, alpha_dot))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::build_graph;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const R: f64 = 25.455844122715714;

    fn pot() -> BoundedPotential {
        BoundedPotential::new(R, 20000.0)
    }

    /// Malicious agent at `center` with `s` neighbors placed by the polygon
    /// generator, all at the same velocity.
    fn polygon_swarm(
        s: usize,
        delta_bar: f64,
        orientation: f64,
        center: Vector,
        velocity: Vector,
    ) -> (Vec<Vector>, Vec<Vector>) {
        let disp = desired_polygon(s, delta_bar, orientation).unwrap();
        let mut positions = vec![center.clone()];
        for d in &disp {
            positions.push(&center - d);
        }
        let velocities = vec![velocity; s + 1];
        (positions, velocities)
    }

    #[test]
    fn polygon_geometry() {
        for s in 2..=8 {
            let disp = desired_polygon(s, 12.0, 0.7).unwrap();
            let sum: Vector = disp.iter().fold(Vector::zeros(2), |acc, d| acc + d);
            assert!(sum.norm() < 1e-12);
            for d in &disp {
                assert_relative_eq!(d.norm(), 12.0, max_relative = 1e-12);
            }
            // Leader separations stay below 2 delta_bar < R.
            for a in 0..s {
                for b in a + 1..s {
                    assert!((&disp[a] - &disp[b]).norm() <= 24.0 + 1e-9);
                }
            }
        }
        assert!(desired_polygon(1, 12.0, 0.0).is_err());
    }

    #[test]
    fn polygon_antipodal_and_square_cases() {
        let disp = desired_polygon(2, 12.0, 0.0).unwrap();
        assert_relative_eq!((&disp[0] - &disp[1]).norm(), 24.0, max_relative = 1e-12);
        assert!(24.0 < R);

        let disp = desired_polygon(3, 12.0, 0.0).unwrap();
        let sum: Vector = disp.iter().fold(Vector::zeros(2), |acc, d| acc + d);
        assert!(sum.norm() < 1e-12);

        let disp = desired_polygon(4, 12.0, 0.0).unwrap();
        let side = (&disp[0] - &disp[1]).norm();
        assert_relative_eq!(side, 12.0 * 2f64.sqrt(), max_relative = 1e-12);
        assert!(side < R);
    }

    #[test]
    fn normal_law_trivial_cases() {
        let p = pot();
        // No neighbors.
        let positions = vec![Vector::zeros(2), Vector::from_column_slice(&[2.0 * R, 0.0])];
        let velocities = vec![Vector::from_column_slice(&[1.0, 2.0]); 2];
        let g = build_graph(&positions, R);
        assert_eq!(u_normal(0, &positions, &velocities, &g, &p).unwrap(), Vector::zeros(2));

        // Equal velocities, all distances at the potential minimum.
        let delta = p.delta();
        let positions = vec![Vector::zeros(2), Vector::from_column_slice(&[delta, 0.0])];
        let g = build_graph(&positions, R);
        let u = u_normal(0, &positions, &velocities, &g, &p).unwrap();
        assert!(u.norm() < 1e-10);
    }

    #[test]
    fn normal_law_matches_potential_slope() {
        let p = pot();
        let d = 10.0; // below delta: repulsion wins, force pushes 0 away from 1
        let positions = vec![Vector::zeros(2), Vector::from_column_slice(&[d, 0.0])];
        let velocities = vec![Vector::zeros(2); 2];
        let g = build_graph(&positions, R);
        let u = u_normal(0, &positions, &velocities, &g, &p).unwrap();
        let slope = p.d_attraction(d) + p.d_repulsion(d);
        // u = -grad V = -slope * direction; direction of x_01 is -e_x.
        assert_relative_eq!(u[0], slope, max_relative = 1e-12);
        assert_relative_eq!(u[1], 0.0, epsilon = 1e-12);
        assert!(u[0] < 0.0, "agents closer than delta must repel");
    }

    #[test]
    fn malicious_law_degenerates_to_normal() {
        let p = pot();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let positions: Vec<Vector> = (0..5)
            .map(|_| Vector::from_column_slice(&[rng.gen_range(-9.0..9.0), rng.gen_range(-9.0..9.0)]))
            .collect();
        let velocities: Vec<Vector> = (0..5)
            .map(|_| Vector::from_column_slice(&[rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)]))
            .collect();
        let g = build_graph(&positions, R);
        let mal = u_malicious(0, &positions, &velocities, &g, &p, 1.0, 1.0, 1.0).unwrap();
        let norm = u_normal(0, &positions, &velocities, &g, &p).unwrap();
        assert_relative_eq!(mal, norm, max_relative = 1e-12);
    }

    #[test]
    fn lemma_1_balance_on_polygons() {
        let p = pot();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for s in 2..=8 {
            for _ in 0..20 {
                let orientation = rng.gen_range(0.0..TAU);
                let delta_bar = rng.gen_range(1.0..R / 2.0);
                let k_v = rng.gen_range(-10.0..10.0);
                let k_a = rng.gen_range(-10.0..10.0);
                let k_r = rng.gen_range(-1e6..1e6);
                let (positions, velocities) = polygon_swarm(
                    s,
                    delta_bar,
                    orientation,
                    Vector::from_column_slice(&[3.0, -4.0]),
                    Vector::from_column_slice(&[1.5, 0.5]),
                );
                let g = build_graph(&positions, R);
                assert_eq!(g.degree(0), s);
                let u = u_malicious(0, &positions, &velocities, &g, &p, k_v, k_a, k_r).unwrap();
                let k_norm = (k_v * k_v + k_a * k_a + k_r * k_r).sqrt();
                assert!(
                    u.norm() <= 1e-9 * (1.0 + k_norm),
                    "s = {s}, |u| = {}",
                    u.norm()
                );
            }
        }
    }

    #[test]
    fn siv_parameters_term_by_term() {
        let p = pot();
        // Asymmetric neighborhood.
        let positions = vec![
            Vector::zeros(2),
            Vector::from_column_slice(&[11.0, 2.0]),
            Vector::from_column_slice(&[-9.0, 7.0]),
        ];
        let velocities = vec![
            Vector::from_column_slice(&[1.0, 0.0]),
            Vector::from_column_slice(&[0.0, 1.0]),
            Vector::from_column_slice(&[-1.0, 0.5]),
        ];
        let g = build_graph(&positions, R);
        let u = u_malicious(0, &positions, &velocities, &g, &p, 0.8, 0.0, 450000.0).unwrap();
        let mut expected = Vector::zeros(2);
        for j in [1usize, 2] {
            expected -= (&velocities[0] - &velocities[j]) * 0.8;
            expected -= p.grad_repulsion(&(&positions[0] - &positions[j])).unwrap() * 450000.0;
        }
        assert_relative_eq!(u, expected, max_relative = 1e-12);
    }

    #[test]
    fn regressor_bilinearity() {
        let p = pot();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let positions: Vec<Vector> = (0..6)
                .map(|_| Vector::from_column_slice(&[rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0)]))
                .collect();
            let velocities: Vec<Vector> = (0..6)
                .map(|_| Vector::from_column_slice(&[rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)]))
                .collect();
            let g = build_graph(&positions, R);
            let c = regressor(0, &positions, &velocities, &g, &p).unwrap();
            for _ in 0..100 {
                let k = Vector3::new(
                    rng.gen_range(-5.0..5.0),
                    rng.gen_range(-5.0..5.0),
                    rng.gen_range(-1e5..1e5),
                );
                let u = u_malicious(0, &positions, &velocities, &g, &p, k[0], k[1], k[2]).unwrap();
                let scale = 1.0 + u.norm();
                assert!((u + c.apply(&k)).norm() / scale < 1e-12);
            }
        }
    }

    #[test]
    fn regressor_vanishing_columns() {
        let p = pot();
        // Equal velocities: first column zero.
        let (positions, velocities) =
            polygon_swarm(4, 12.0, 0.3, Vector::zeros(2), Vector::from_column_slice(&[2.0, 1.0]));
        let g = build_graph(&positions, R);
        let c = regressor(0, &positions, &velocities, &g, &p).unwrap();
        assert!(c.matrix.column(0).norm() < 1e-14);
        // Polygon symmetry: the potential columns cancel too.
        assert!(c.matrix.column(1).norm() < 1e-12);
        assert!(c.matrix.column(2).norm() < 1e-12);
    }

    #[test]
    fn sum_of_normal_controls_cancels() {
        let p = pot();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..20 {
            let n = 8;
            let positions: Vec<Vector> = (0..n)
                .map(|_| Vector::from_column_slice(&[rng.gen_range(-15.0..15.0), rng.gen_range(-15.0..15.0)]))
                .collect();
            let velocities: Vec<Vector> = (0..n)
                .map(|_| Vector::from_column_slice(&[rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)]))
                .collect();
            let g = build_graph(&positions, R);
            let mut total = Vector::zeros(2);
            let mut scale = 0.0f64;
            for i in 0..n {
                let u = u_normal(i, &positions, &velocities, &g, &p).unwrap();
                scale = scale.max(u.norm());
                total += u;
            }
            assert!(total.norm() <= 1e-10 * scale.max(1.0), "residual {}", total.norm());
        }
    }

    fn leader_shape(s: usize, delta_bar: f64, orientation: f64) -> LeaderShape {
        let disp = desired_polygon(s, delta_bar, orientation).unwrap();
        LeaderShape {
            malicious: 0,
            displacements: (1..=s).zip(disp).collect(),
            radius: R,
            h_bar: 100.0,
            iota: 1.0,
        }
    }

    #[test]
    fn leader_law_vanishes_at_desired_configuration() {
        let shape = leader_shape(4, 12.0, 0.2);
        let (positions, velocities) =
            polygon_swarm(4, 12.0, 0.2, Vector::zeros(2), Vector::from_column_slice(&[1.0, -2.0]));
        let g = build_graph(&positions, R);
        let group: std::collections::BTreeSet<usize> = (0..=4).collect();
        let c = Regressor::zeros(2);
        let u = u_leader(
            1,
            &positions,
            &velocities,
            &g,
            &group,
            &shape,
            6.0,
            2.0,
            &c,
            &Vector3::zeros(),
        )
        .unwrap();
        assert!(u.norm() < 1e-10);
    }

    #[test]
    fn leader_law_restores_toward_desired_shape() {
        let shape = leader_shape(4, 12.0, 0.0);
        let (mut positions, velocities) =
            polygon_swarm(4, 12.0, 0.0, Vector::zeros(2), Vector::zeros(2));
        // Perturb leader 1 radially outward by 0.1 m.
        let dir = positions[1].clone().normalize();
        positions[1] += &dir * 0.1;
        let g = build_graph(&positions, R);
        let group: std::collections::BTreeSet<usize> = (0..=4).collect();
        let c = Regressor::zeros(2);
        let kappa_x = 2.0;
        let u = u_leader(1, &positions, &velocities, &g, &group, &shape, 6.0, kappa_x, &c, &Vector3::zeros())
            .unwrap();

        // Finite-difference oracle: u must equal -kappa_x times the gradient
        // of the summed pair potentials with respect to leader 1's position.
        let total = |x1: &Vector| -> f64 {
            let mut sum = 0.0;
            for p in [0usize, 2, 3, 4] {
                if g.has_edge(1, p) {
                    sum += shape.pair_potential(1, p).unwrap().value(&(x1 - &positions[p])).unwrap();
                }
            }
            sum
        };
        let h = 1e-6 * R;
        let mut fd = Vector::zeros(2);
        for c in 0..2 {
            let mut hi = positions[1].clone();
            let mut lo = positions[1].clone();
            hi[c] += h;
            lo[c] -= h;
            fd[c] = (total(&hi) - total(&lo)) / (2.0 * h);
        }
        assert_relative_eq!(u, -fd * kappa_x, max_relative = 1e-6);
        // The radial component pulls the leader back in.
        assert!(u.dot(&dir) < 0.0);
    }

    #[test]
    fn follower_law_hand_case() {
        let p = pot();
        let positions = vec![Vector::zeros(2), Vector::from_column_slice(&[p.delta(), 0.0])];
        let velocities = vec![
            Vector::from_column_slice(&[0.3, -0.2]),
            Vector::zeros(2),
        ];
        let g = build_graph(&positions, R);
        let gamma = EdgeMap::uniform(1.0);
        let alpha = |_: usize, _: usize| 2.0;
        let (u, alpha_dot) = u_follower(0, &positions, &velocities, &g, &p, &alpha, &gamma, 1e-3).unwrap();
        // sgn term: -2 * (1, -1); the potential gradient vanishes at delta.
        assert_relative_eq!(u, Vector::from_column_slice(&[-2.0, 2.0]), epsilon = 1e-10);
        assert_relative_eq!(alpha_dot[&1], 0.5, max_relative = 1e-12);
    }

    #[test]
    fn follower_law_idle_at_consensus() {
        let p = pot();
        let positions = vec![Vector::zeros(2), Vector::from_column_slice(&[p.delta(), 0.0])];
        let velocities = vec![Vector::from_column_slice(&[1.0, 1.0]); 2];
        let g = build_graph(&positions, R);
        let gamma = EdgeMap::uniform(1.0);
        let alpha = |_: usize, _: usize| 3.0;
        let (u, alpha_dot) = u_follower(0, &positions, &velocities, &g, &p, &alpha, &gamma, 1e-3).unwrap();
        assert!(u.norm() < 1e-10);
        assert_eq!(alpha_dot[&1], 0.0);
    }

    #[test]
    fn sgn_term_bounded_by_gain_sum() {
        let p = pot();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..50 {
            let positions: Vec<Vector> = (0..5)
                .map(|_| Vector::from_column_slice(&[rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0)]))
                .collect();
            let velocities: Vec<Vector> = (0..5)
                .map(|_| Vector::from_column_slice(&[rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)]))
                .collect();
            let g = build_graph(&positions, R);
            let alpha_val = rng.gen_range(0.0..4.0);
            let alpha = |_: usize, _: usize| alpha_val;
            let gamma = EdgeMap::uniform(1.0);
            // Strip the potential part by subtracting it out.
            let (u, _) = u_follower(0, &positions, &velocities, &g, &p, &alpha, &gamma, 1e-3).unwrap();
            let mut pot_part = Vector::zeros(2);
            for j in g.neighbors(0) {
                pot_part -= p.grad_v_pair(&(&positions[0] - &positions[j])).unwrap();
            }
            let sgn_part = u - pot_part;
            let bound = alpha_val * g.degree(0) as f64;
            for c in 0..2 {
                assert!(sgn_part[c].abs() <= bound + 1e-9);
            }
        }
    }

    #[test]
    fn deadband_silences_small_differences() {
        let z = Vector::from_column_slice(&[5e-4, -5e-4]);
        assert_eq!(sgn_deadband(&z, 1e-3), Vector::zeros(2));
        let z = Vector::from_column_slice(&[2e-3, -2e-3]);
        assert_eq!(sgn_deadband(&z, 1e-3), Vector::from_column_slice(&[1.0, -1.0]));
    }
}
