//! Coupled fixed-step integration of the whole closed loop: agent dynamics,
//! estimator filters, estimate update, and adaptive follower gains, plus the
//! energy monitors, containment diagnostics, and the event log.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, Matrix3, Vector3};
use serde::Serialize;

use crate::controllers::{self, LeaderShape, Regressor};
use crate::estimator::{self, EstimatorState};
use crate::potentials::{self, BoundedPotential};
use crate::swarm::{ControlMode, ScenarioConfig, Vector};
use crate::topology::{self, LayerPartition, ProximityGraph};
use crate::{Error, Result};

/// Default containment tolerances: residual acceleration of the malicious
/// agent and per-leader distance error.
pub const CONTAINMENT_TOL_U: f64 = 0.05;
pub const CONTAINMENT_TOL_D: f64 = 0.5;

/// Full integrated state at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub time: f64,
    pub positions: Vec<Vector>,
    pub velocities: Vec<Vector>,
    pub estimator: EstimatorState,
    /// Symmetric matrix of adaptive follower gains `alpha_ij`.
    pub alpha: DMatrix<f64>,
}

impl SimState {
    fn axpy(&self, d: &Derivative, h: f64) -> SimState {
        SimState {
            time: self.time + h,
            positions: self
                .positions
                .iter()
                .zip(&d.dpos)
                .map(|(x, dx)| x + dx * h)
                .collect(),
            velocities: self
                .velocities
                .iter()
                .zip(&d.dvel)
                .map(|(v, dv)| v + dv * h)
                .collect(),
            estimator: EstimatorState {
                v_filtered: &self.estimator.v_filtered + &d.dv_filtered * h,
                c_filtered: &self.estimator.c_filtered + &d.dc_filtered * h,
                k_hat: self.estimator.k_hat + d.dk_hat * h,
            },
            alpha: &self.alpha + &d.dalpha * h,
        }
    }

    fn is_finite(&self) -> bool {
        self.positions
            .iter()
            .chain(self.velocities.iter())
            .all(|v| v.iter().all(|x| x.is_finite()))
            && self.estimator.v_filtered.iter().all(|x| x.is_finite())
            && self.estimator.c_filtered.iter().all(|x| x.is_finite())
            && self.estimator.k_hat.iter().all(|x| x.is_finite())
            && self.alpha.iter().all(|x| x.is_finite())
    }
}

#[derive(Debug, Clone)]
struct Derivative {
    dpos: Vec<Vector>,
    dvel: Vec<Vector>,
    dv_filtered: Vector,
    dc_filtered: DMatrix<f64>,
    dk_hat: Vector3<f64>,
    dalpha: DMatrix<f64>,
}

impl Derivative {
    fn combine(parts: [(&Derivative, f64); 4]) -> Derivative {
        let proto = parts[0].0;
        let n = proto.dpos.len();
        let dim = proto.dv_filtered.len();
        let mut out = Derivative {
            dpos: vec![Vector::zeros(dim); n],
            dvel: vec![Vector::zeros(dim); n],
            dv_filtered: Vector::zeros(dim),
            dc_filtered: DMatrix::zeros(dim, 3),
            dk_hat: Vector3::zeros(),
            dalpha: DMatrix::zeros(n, n),
        };
        for (d, w) in parts {
            for i in 0..n {
                out.dpos[i] += &d.dpos[i] * w;
                out.dvel[i] += &d.dvel[i] * w;
            }
            out.dv_filtered += &d.dv_filtered * w;
            out.dc_filtered += &d.dc_filtered * w;
            out.dk_hat += d.dk_hat * w;
            out.dalpha += &d.dalpha * w;
        }
        out
    }
}

/// Per-evaluation byproducts used for recording and event detection.
#[derive(Debug, Clone)]
pub struct StepInfo {
    pub graph: ProximityGraph,
    pub controls: Vec<Vector>,
    pub regressor: Regressor,
}

/// One recorded event.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
    pub payload: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    EdgeAdded,
    EdgeLost,
    Collision,
    Escape,
    Abort,
}

impl std::fmt::Display for EventKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            EventKind::EdgeAdded => "edge_added",
            EventKind::EdgeLost => "edge_lost",
            EventKind::Collision => "collision",
            EventKind::Escape => "escape",
            EventKind::Abort => "abort",
        };
        f.write_str(s)
    }
}

/// Scalar monitors sampled every step.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub time: f64,
    pub energy_h: f64,
    pub energy_upsilon: f64,
    pub min_distance: f64,
    pub velocity_spread: f64,
    /// `|u_{i_f}|`, the containment residual.
    pub containment_residual: f64,
    pub estimator_residual: f64,
    pub k_hat: [f64; 3],
}

/// Snapshot of every agent at one recorded time.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryFrame {
    pub time: f64,
    pub positions: Vec<Vector>,
    pub velocities: Vec<Vector>,
    pub controls: Vec<Vector>,
}

/// Containment verdict at one instant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContainmentReport {
    pub contained: bool,
    pub control_residual: f64,
    pub tol_u: f64,
    pub tol_d: f64,
    /// `| |x_{i_f j}| - delta_bar |` per designed leader, sorted by id.
    pub distance_errors: Vec<f64>,
}

/// End-of-run verdicts against the flocking objectives.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub velocity_spread_initial: f64,
    pub velocity_spread_final: f64,
    pub containment: ContainmentReport,
    pub min_distance_over_run: f64,
    pub collision_free: bool,
    pub group_edges_preserved: bool,
    pub follower_edges_preserved: bool,
    pub h_initial: f64,
    pub h_bar: f64,
    pub h_final: f64,
    pub alpha_required: Option<f64>,
    pub alpha_max_achieved: f64,
    pub alpha_bar_used: Option<f64>,
    pub k_hat_final: [f64; 3],
    pub aborted: Option<String>,
}

/// Complete record of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationRecord {
    pub times: Vec<f64>,
    pub metrics: Vec<MetricsRow>,
    pub trajectory: Vec<TrajectoryFrame>,
    pub events: Vec<Event>,
    pub summary: Summary,
}

/// Sufficient statistics of the adaptive-gain terms of the whole-swarm
/// energy; together with the rest of the row they give `Upsilon` for any
/// choice of `alpha_bar` after the run.
#[derive(Debug, Clone, Copy)]
struct UpsilonParts {
    base: f64,
    weight_sq: f64,
    weight_lin: f64,
    weight_const: f64,
}

impl UpsilonParts {
    fn evaluate(&self, alpha_bar: f64) -> f64 {
        self.base + self.weight_sq - 2.0 * alpha_bar * self.weight_lin
            + alpha_bar * alpha_bar * self.weight_const
    }
}

/// Frozen per-run context: roles, desired shape, ceilings, and the true
/// malicious gains (the latter only feed the monitors and the malicious
/// agent's own law, never the defenders).
pub struct Engine {
    pub cfg: ScenarioConfig,
    pub pot: BoundedPotential,
    pub partition: LayerPartition,
    pub group: BTreeSet<usize>,
    pub shape: Option<LeaderShape>,
    pub h_bar: f64,
    gamma_inv: Matrix3<f64>,
    /// Unordered leader pairs adjacent at t = 0 (frozen for the monitors).
    leader_pairs: Vec<(usize, usize)>,
    /// Leader sets `L(i)` per follower, frozen at t = 0.
    leader_sets: Vec<BTreeSet<usize>>,
    /// `lambda_min(R_j(0))` per leader with followers.
    lambda_mins: Vec<f64>,
    /// `max_j s_F(j)` at t = 0.
    max_group_size: usize,
}

impl Engine {
    pub fn new(cfg: ScenarioConfig) -> Result<Engine> {
        let report = crate::swarm::validate_scenario(&cfg);
        if !report.pass() {
            return Err(Error::Validation(report.violations));
        }
        Self::new_unchecked(cfg)
    }

    /// Build the engine without the validation gate (`--force` semantics).
    pub fn new_unchecked(cfg: ScenarioConfig) -> Result<Engine> {
        let pot = BoundedPotential::new(cfg.sensing_radius, cfg.potential_ceiling);
        let graph0 = topology::build_graph(&cfg.initial_positions(), cfg.sensing_radius);
        let partition = topology::layer_partition(&graph0, cfg.malicious_id);
        let group = partition.group();

        let hierarchical = cfg.control_mode == ControlMode::Hierarchical;
        let shape = match cfg.resolved_displacements() {
            Ok(disp) => Some(disp),
            Err(e) if hierarchical => return Err(e),
            Err(_) => None,
        };

        let (shape, h_bar) = match shape {
            Some(disp) => {
                let h_bar = match cfg.leader.h_bar {
                    Some(h) => h,
                    None => potentials::compute_bar_h(
                        &cfg.initial_states,
                        &graph0,
                        cfg.malicious_id,
                        &disp,
                        cfg.leader.kappa_x,
                        &cfg.estimator.gamma_k,
                        &Vector3::new(
                            cfg.malicious.k_v_bound,
                            cfg.malicious.k_a_bound,
                            cfg.malicious.k_r_bound,
                        ),
                        &cfg.estimator.k_hat0,
                    )?,
                };
                (
                    Some(LeaderShape {
                        malicious: cfg.malicious_id,
                        displacements: disp,
                        radius: cfg.sensing_radius,
                        h_bar,
                        iota: cfg.leader.iota,
                    }),
                    h_bar,
                )
            }
            None => (None, f64::NAN),
        };

        let leader_pairs: Vec<(usize, usize)> = {
            let leaders: Vec<usize> = partition.leaders.iter().copied().collect();
            let mut pairs = Vec::new();
            for (a, &i) in leaders.iter().enumerate() {
                for &j in &leaders[a + 1..] {
                    if graph0.has_edge(i, j) {
                        pairs.push((i, j));
                    }
                }
            }
            pairs
        };

        let groups = topology::follower_groups(&graph0, &partition);
        let mut leader_sets = vec![BTreeSet::new(); cfg.n_agents];
        for (leader, block) in &groups {
            for &f in &block.followers {
                leader_sets[f].insert(*leader);
            }
        }
        let lambda_mins: Vec<f64> = groups.iter().map(|(_, b)| b.lambda_min).collect();
        let max_group_size = groups.iter().map(|(_, b)| b.followers.len()).max().unwrap_or(0);

        let gamma_inv = cfg
            .estimator
            .gamma_k
            .try_inverse()
            .expect("gamma_k validated positive definite");

        Ok(Engine {
            cfg,
            pot,
            partition,
            group,
            shape,
            h_bar,
            gamma_inv,
            leader_pairs,
            leader_sets,
            lambda_mins,
            max_group_size,
        })
    }

    pub fn initial_state(&self) -> SimState {
        let n = self.cfg.n_agents;
        let mut alpha = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    alpha[(i, j)] = self.cfg.follower.alpha0.get(i, j);
                }
            }
        }
        SimState {
            time: 0.0,
            positions: self.cfg.initial_positions(),
            velocities: self.cfg.initial_states.iter().map(|s| s.velocity.clone()).collect(),
            estimator: EstimatorState::initial(
                &self.cfg.initial_states[self.cfg.malicious_id].velocity,
                &self.cfg.estimator,
            ),
            alpha,
        }
    }

    fn rhs(&self, state: &SimState) -> Result<(Derivative, StepInfo)> {
        let cfg = &self.cfg;
        let n = cfg.n_agents;
        let i_f = cfg.malicious_id;
        let graph = topology::build_graph(&state.positions, cfg.sensing_radius);
        let c = controllers::regressor(i_f, &state.positions, &state.velocities, &graph, &self.pot)?;

        let mut controls = Vec::with_capacity(n);
        let mut dalpha = DMatrix::zeros(n, n);
        for i in 0..n {
            let u = match self.role_of(i) {
                Role::Malicious => match cfg.control_mode {
                    ControlMode::AllNormal => {
                        controllers::u_normal(i, &state.positions, &state.velocities, &graph, &self.pot)?
                    }
                    _ => controllers::u_malicious(
                        i,
                        &state.positions,
                        &state.velocities,
                        &graph,
                        &self.pot,
                        cfg.malicious.k_v,
                        cfg.malicious.k_a,
                        cfg.malicious.k_r,
                    )?,
                },
                Role::Leader if cfg.control_mode == ControlMode::Hierarchical => {
                    let shape = self.shape.as_ref().expect("hierarchical mode has a shape");
                    controllers::u_leader(
                        i,
                        &state.positions,
                        &state.velocities,
                        &graph,
                        &self.group,
                        shape,
                        cfg.leader.kappa_v,
                        cfg.leader.kappa_x,
                        &c,
                        &state.estimator.k_hat,
                    )?
                }
                Role::Follower if cfg.control_mode == ControlMode::Hierarchical => {
                    let alpha = |a: usize, b: usize| state.alpha[(a, b)];
                    let (u, rates) = controllers::u_follower(
                        i,
                        &state.positions,
                        &state.velocities,
                        &graph,
                        &self.pot,
                        &alpha,
                        &cfg.follower.gamma,
                        cfg.follower.sgn_deadband,
                    )?;
                    for (p, rate) in rates {
                        dalpha[(i, p)] = rate;
                        dalpha[(p, i)] = rate;
                    }
                    u
                }
                _ => controllers::u_normal(i, &state.positions, &state.velocities, &graph, &self.pot)?,
            };
            controls.push(u);
        }

        let mut velocity_sum = Vector::zeros(cfg.dim);
        for j in graph.neighbors(i_f) {
            velocity_sum += &state.velocities[j] - &state.velocities[i_f];
        }
        let (dv_filtered, dc_filtered) = estimator::filter_derivatives(
            &state.estimator,
            cfg.estimator.filter_gain,
            &state.velocities[i_f],
            &c,
        );
        let dk_hat = estimator::estimate_derivative(
            &state.estimator,
            &cfg.estimator.gamma_k,
            &c,
            &velocity_sum,
            &state.velocities[i_f],
        );

        let d = Derivative {
            dpos: state.velocities.clone(),
            dvel: controls.clone(),
            dv_filtered,
            dc_filtered,
            dk_hat,
            dalpha,
        };
        Ok((d, StepInfo { graph, controls, regressor: c }))
    }

    fn role_of(&self, i: usize) -> Role {
        if i == self.partition.malicious {
            Role::Malicious
        } else if self.partition.is_leader(i) {
            Role::Leader
        } else {
            Role::Follower
        }
    }

    /// One classical 4th-order step of the coupled system. Also returns the
    /// evaluation byproducts at the step's start time.
    pub fn step(&self, state: &SimState, dt: f64) -> Result<(SimState, StepInfo)> {
        if !(dt > 0.0) {
            return Err(Error::InvalidStep(dt));
        }
        let (k1, info) = self.rhs(state)?;
        let (k2, _) = self.rhs(&state.axpy(&k1, dt / 2.0))?;
        let (k3, _) = self.rhs(&state.axpy(&k2, dt / 2.0))?;
        let (k4, _) = self.rhs(&state.axpy(&k3, dt))?;
        let total = Derivative::combine([
            (&k1, 1.0 / 6.0),
            (&k2, 1.0 / 3.0),
            (&k3, 1.0 / 3.0),
            (&k4, 1.0 / 6.0),
        ]);
        let next = state.axpy(&total, dt);
        if !next.is_finite() {
            return Err(Error::NumericalAbort {
                time: state.time,
                reason: "non-finite state after step".into(),
            });
        }
        Ok((next, info))
    }

    /// Group energy `H`: leader potentials over the frozen `V_g` topology,
    /// leader velocity errors, and the weighted estimate error. Uses the
    /// true gains for monitoring only.
    pub fn energy_h(&self, state: &SimState) -> Result<f64> {
        let shape = match &self.shape {
            Some(s) => s,
            None => return Ok(f64::NAN),
        };
        let cfg = &self.cfg;
        let i_f = cfg.malicious_id;
        let kappa_x = cfg.leader.kappa_x;
        // H is built on the premise that the frozen V_g edges persist; if one
        // stretches past R (only possible once containment has already
        // failed), saturate the potential at the boundary so the monitor
        // stays total instead of killing the run.
        let saturated = |pot: &crate::potentials::LeaderPotential, x: &Vector| {
            let d = x.norm();
            if d <= cfg.sensing_radius {
                pot.value(x)
            } else {
                // Shrink a hair inside R so rounding cannot push the clamped
                // norm back over the domain edge.
                pot.value(&(x * (cfg.sensing_radius * (1.0 - 1e-12) / d)))
            }
        };
        let mut h = 0.0;
        for &j in &self.partition.leaders {
            let pot = shape.pair_potential(j, i_f)?;
            h += kappa_x * saturated(&pot, &(&state.positions[j] - &state.positions[i_f]))?;
            h += 0.5 * (&state.velocities[j] - &state.velocities[i_f]).norm_squared();
        }
        for &(i, j) in &self.leader_pairs {
            let pot = shape.pair_potential(j, i)?;
            // kappa_x/2 over ordered pairs = kappa_x per unordered pair.
            h += kappa_x * saturated(&pot, &(&state.positions[j] - &state.positions[i]))?;
        }
        let k_tilde = cfg.malicious.k() - state.estimator.k_hat;
        h += 0.5 * (k_tilde.transpose() * self.gamma_inv * k_tilde)[0];
        Ok(h)
    }

    fn upsilon_parts(&self, state: &SimState, graph: &ProximityGraph, h: f64) -> Result<UpsilonParts> {
        let cfg = &self.cfg;
        let mut base = h;
        let mut w_sq = 0.0;
        let mut w_lin = 0.0;
        let mut w_const = 0.0;
        for &i in &self.partition.followers {
            let s_l = self.leader_sets[i].len() as f64;
            for p in graph.neighbors(i) {
                let x_ip = &state.positions[i] - &state.positions[p];
                if self.leader_sets[i].contains(&p) {
                    base += self.pot.v_pair(x_ip.norm())?.total;
                }
                if self.partition.is_follower(p) {
                    base += 0.5 * s_l * self.pot.v_pair(x_ip.norm())?.total;
                    let w = s_l / (4.0 * cfg.follower.gamma.get(i, p));
                    let a = state.alpha[(i, p)];
                    w_sq += w * a * a;
                    w_lin += w * a;
                    w_const += w;
                }
                if self.partition.is_leader(p) {
                    let w = 1.0 / (2.0 * cfg.follower.gamma.get(i, p));
                    let a = state.alpha[(i, p)];
                    w_sq += w * a * a;
                    w_lin += w * a;
                    w_const += w;
                }
            }
            for &j in &self.leader_sets[i] {
                base += 0.5 * (&state.velocities[i] - &state.velocities[j]).norm_squared();
            }
        }
        Ok(UpsilonParts {
            base,
            weight_sq: w_sq,
            weight_lin: w_lin,
            weight_const: w_const,
        })
    }

    /// Whole-swarm energy `Upsilon` for a given `alpha_bar`.
    pub fn energy_upsilon(&self, state: &SimState, alpha_bar: f64) -> Result<f64> {
        let graph = topology::build_graph(&state.positions, self.cfg.sensing_radius);
        let h = self.energy_h(state)?;
        Ok(self.upsilon_parts(state, &graph, h)?.evaluate(alpha_bar))
    }

    /// Containment check against the designed leader set.
    pub fn containment_check(
        &self,
        state: &SimState,
        control_residual: f64,
        tol_u: f64,
        tol_d: f64,
    ) -> ContainmentReport {
        let i_f = self.cfg.malicious_id;
        let delta_bar = self.cfg.leader.delta_bar;
        let distance_errors: Vec<f64> = self
            .partition
            .leaders
            .iter()
            .map(|&j| ((&state.positions[j] - &state.positions[i_f]).norm() - delta_bar).abs())
            .collect();
        let contained = control_residual <= tol_u
            && !distance_errors.is_empty()
            && distance_errors.iter().all(|&e| e <= tol_d);
        ContainmentReport {
            contained,
            control_residual,
            tol_u,
            tol_d,
            distance_errors,
        }
    }

    /// Gain bound `mu_bar / min_j sqrt(lambda_min(R_j(0)))` from the
    /// measured supremum `mu` of the leaders' control 1-norms.
    pub fn alpha_required(&self, mu: f64) -> Option<f64> {
        if self.lambda_mins.is_empty() {
            return None;
        }
        let mu_bar = mu * (self.max_group_size as f64).sqrt();
        let min_sqrt = self
            .lambda_mins
            .iter()
            .map(|l| l.sqrt())
            .fold(f64::INFINITY, f64::min);
        Some(mu_bar / min_sqrt)
    }

    /// Integrate the scenario over `[0, t_end]` and assemble the record.
    pub fn run(&self) -> Result<SimulationRecord> {
        let cfg = &self.cfg;
        let i_f = cfg.malicious_id;
        let steps = (cfg.t_end / cfg.dt).round() as usize;
        let mut state = self.initial_state();

        let mut times = Vec::with_capacity(steps + 1);
        let mut metrics = Vec::with_capacity(steps + 1);
        let mut parts = Vec::with_capacity(steps + 1);
        let mut trajectory = Vec::new();
        let mut events = Vec::new();

        let mut prev_edges: Option<BTreeSet<(usize, usize)>> = None;
        let mut escaped: BTreeSet<usize> = BTreeSet::new();
        let mut below_collision: BTreeSet<(usize, usize)> = BTreeSet::new();
        let mut mu = 0.0f64;
        let mut alpha_max = 0.0f64;
        let mut min_distance_over_run = f64::INFINITY;
        let mut aborted = None;

        for step_idx in 0..=steps {
            let (_, info) = match self.rhs(&state) {
                Ok(x) => x,
                Err(e) => {
                    aborted = Some(e.to_string());
                    events.push(Event {
                        time: state.time,
                        kind: EventKind::Abort,
                        payload: e.to_string(),
                    });
                    break;
                }
            };

            self.detect_events(
                &state,
                &info,
                &mut prev_edges,
                &mut escaped,
                &mut below_collision,
                &mut events,
            );

            let h = self.energy_h(&state)?;
            let row_parts = self.upsilon_parts(&state, &info.graph, h)?;
            let min_dist = min_pairwise_distance(&state.positions);
            min_distance_over_run = min_distance_over_run.min(min_dist);
            let spread = velocity_spread(&state.velocities);
            for &j in &self.partition.leaders {
                mu = mu.max(info.controls[j].lp_norm(1));
            }
            alpha_max = alpha_max.max(state.alpha.iter().cloned().fold(0.0, f64::max));

            times.push(state.time);
            metrics.push(MetricsRow {
                time: state.time,
                energy_h: h,
                energy_upsilon: f64::NAN, // filled once alpha_bar is fixed
                min_distance: min_dist,
                velocity_spread: spread,
                containment_residual: info.controls[i_f].norm(),
                estimator_residual: estimator::prediction_residual(
                    &state.estimator,
                    &state.velocities[i_f],
                ),
                k_hat: [
                    state.estimator.k_hat[0],
                    state.estimator.k_hat[1],
                    state.estimator.k_hat[2],
                ],
            });
            parts.push(row_parts);

            if step_idx % cfg.record_stride == 0 || step_idx == steps {
                trajectory.push(TrajectoryFrame {
                    time: state.time,
                    positions: state.positions.clone(),
                    velocities: state.velocities.clone(),
                    controls: info.controls.clone(),
                });
            }

            if step_idx == steps {
                break;
            }
            match self.step(&state, cfg.dt) {
                Ok((next, _)) => state = next,
                Err(e) => {
                    aborted = Some(e.to_string());
                    events.push(Event {
                        time: state.time,
                        kind: EventKind::Abort,
                        payload: e.to_string(),
                    });
                    break;
                }
            }
        }

        let alpha_required = self.alpha_required(mu);
        let alpha_bar = self.cfg.alpha_bar.or(alpha_required);
        if let Some(ab) = alpha_bar {
            for (row, p) in metrics.iter_mut().zip(&parts) {
                row.energy_upsilon = p.evaluate(ab);
            }
        }

        let last_metrics = metrics.last().expect("at least one sample");
        let first_metrics = metrics.first().expect("at least one sample");
        let containment = self.containment_check(
            &state,
            last_metrics.containment_residual,
            CONTAINMENT_TOL_U,
            CONTAINMENT_TOL_D,
        );
        let group = &self.group;
        let group_edges_preserved = !events.iter().any(|e| {
            e.kind == EventKind::EdgeLost
                && parse_pair(&e.payload)
                    .map(|(a, b)| group.contains(&a) && group.contains(&b))
                    .unwrap_or(false)
        });
        let follower_edges_preserved = !events.iter().any(|e| {
            e.kind == EventKind::EdgeLost
                && parse_pair(&e.payload)
                    .map(|(a, b)| {
                        let fa = self.partition.is_follower(a);
                        let fb = self.partition.is_follower(b);
                        (fa && fb)
                            || (fa && self.leader_sets[a].contains(&b))
                            || (fb && self.leader_sets[b].contains(&a))
                    })
                    .unwrap_or(false)
        });

        let summary = Summary {
            velocity_spread_initial: first_metrics.velocity_spread,
            velocity_spread_final: last_metrics.velocity_spread,
            containment,
            min_distance_over_run,
            collision_free: !events.iter().any(|e| e.kind == EventKind::Collision),
            group_edges_preserved,
            follower_edges_preserved,
            h_initial: first_metrics.energy_h,
            h_bar: self.h_bar,
            h_final: last_metrics.energy_h,
            alpha_required,
            alpha_max_achieved: alpha_max,
            alpha_bar_used: alpha_bar,
            k_hat_final: last_metrics.k_hat,
            aborted,
        };

        Ok(SimulationRecord {
            times,
            metrics,
            trajectory,
            events,
            summary,
        })
    }

    fn detect_events(
        &self,
        state: &SimState,
        info: &StepInfo,
        prev_edges: &mut Option<BTreeSet<(usize, usize)>>,
        escaped: &mut BTreeSet<usize>,
        below_collision: &mut BTreeSet<(usize, usize)>,
        events: &mut Vec<Event>,
    ) {
        let edges = info.graph.edges();
        if let Some(prev) = prev_edges {
            for &(a, b) in edges.difference(prev) {
                events.push(Event {
                    time: state.time,
                    kind: EventKind::EdgeAdded,
                    payload: format!("{a}-{b}"),
                });
            }
            for &(a, b) in prev.difference(&edges) {
                events.push(Event {
                    time: state.time,
                    kind: EventKind::EdgeLost,
                    payload: format!("{a}-{b}"),
                });
            }
        }
        *prev_edges = Some(edges);

        let i_f = self.cfg.malicious_id;
        for &j in &self.partition.leaders {
            let d = (&state.positions[j] - &state.positions[i_f]).norm();
            if d >= self.cfg.sensing_radius && escaped.insert(j) {
                events.push(Event {
                    time: state.time,
                    kind: EventKind::Escape,
                    payload: format!("{i_f}-{j}"),
                });
            }
        }

        let n = self.cfg.n_agents;
        for i in 0..n {
            for j in i + 1..n {
                let d = (&state.positions[i] - &state.positions[j]).norm();
                if d < self.cfg.collision_threshold {
                    if below_collision.insert((i, j)) {
                        events.push(Event {
                            time: state.time,
                            kind: EventKind::Collision,
                            payload: format!("{i}-{j}"),
                        });
                    }
                } else {
                    below_collision.remove(&(i, j));
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    Malicious,
    Leader,
    Follower,
}

pub fn min_pairwise_distance(positions: &[Vector]) -> f64 {
    let n = positions.len();
    let mut min = f64::INFINITY;
    for i in 0..n {
        for j in i + 1..n {
            min = min.min((&positions[i] - &positions[j]).norm());
        }
    }
    min
}

pub fn velocity_spread(velocities: &[Vector]) -> f64 {
    let n = velocities.len();
    let mut max = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            max = max.max((&velocities[i] - &velocities[j]).norm());
        }
    }
    max
}

fn parse_pair(payload: &str) -> Option<(usize, usize)> {
    let (a, b) = payload.split_once('-')?;
    Some((a.parse().ok()?, b.parse().ok()?))
}

/// Validate and run a scenario end to end.
pub fn run(cfg: &ScenarioConfig) -> Result<SimulationRecord> {
    Engine::new(cfg.clone())?.run()
}

/// Run without the validation gate.
pub fn run_forced(cfg: &ScenarioConfig) -> Result<SimulationRecord> {
    Engine::new_unchecked(cfg.clone())?.run()
}
