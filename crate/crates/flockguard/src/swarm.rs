//! Domain types for the swarm, plus scenario validation against the
//! standing assumptions of the control design.

use std::collections::BTreeMap;

use nalgebra::DVector;

use crate::estimator::EstimatorGains;
use crate::{controllers, potentials, topology, Error, Result};

/// Position/velocity/control vector in `m`-dimensional space.
pub type Vector = DVector<f64>;

/// One agent of the swarm: double-integrator state `x_i`, `v_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub id: usize,
    pub position: Vector,
    pub velocity: Vector,
}

impl AgentState {
    pub fn new(id: usize, position: Vector, velocity: Vector) -> Self {
        Self {
            id,
            position,
            velocity,
        }
    }

    pub fn dim(&self) -> usize {
        self.position.len()
    }
}

/// Relative position `x_i - x_j` between two agents.
///
/// Antisymmetric: `relative_position(a, b) == -relative_position(b, a)`.
pub fn relative_position(a: &AgentState, b: &AgentState) -> Result<Vector> {
    if a.position.len() != b.position.len() {
        return Err(Error::DimensionMismatch(a.position.len(), b.position.len()));
    }
    Ok(&a.position - &b.position)
}

/// Falsified controller gains of the malicious agent and their known bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct MaliciousParams {
    pub k_v: f64,
    pub k_a: f64,
    pub k_r: f64,
    pub k_v_bound: f64,
    pub k_a_bound: f64,
    pub k_r_bound: f64,
}

impl MaliciousParams {
    /// Gain vector `k = (k_v, k_a, k_r)`.
    pub fn k(&self) -> nalgebra::Vector3<f64> {
        nalgebra::Vector3::new(self.k_v, self.k_a, self.k_r)
    }
}

/// Parameters of the leader (Layer-2) controller.
#[derive(Debug, Clone, PartialEq)]
pub struct LeaderParams {
    /// Velocity-consensus gain, `>= 1`.
    pub kappa_v: f64,
    /// Shape gain, `>= 1`.
    pub kappa_x: f64,
    /// Designed distance between the malicious agent and each leader,
    /// `0 < delta_bar < R/2`.
    pub delta_bar: f64,
    /// Potential ceiling of the leader potential. Computed from the initial
    /// conditions when absent.
    pub h_bar: Option<f64>,
    /// Regularization constant of the leader potential.
    pub iota: f64,
    /// Orientation of the desired polygon. Defaults to the bearing of the
    /// lowest-id leader relative to the malicious agent at t = 0.
    pub orientation: Option<f64>,
    /// Desired displacements `x*_{i_f j}` keyed by leader id. Generated from
    /// the regular polygon when empty.
    pub desired_displacements: BTreeMap<usize, Vector>,
}

/// Symmetric per-edge value with a default, used for the follower gains.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeMap {
    pub default: f64,
    pub overrides: Vec<(usize, usize, f64)>,
}

impl EdgeMap {
    pub fn uniform(default: f64) -> Self {
        Self {
            default,
            overrides: Vec::new(),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        self.overrides
            .iter()
            .find(|(p, q, _)| {
                let (p, q) = if p <= q { (*p, *q) } else { (*q, *p) };
                p == a && q == b
            })
            .map(|(_, _, v)| *v)
            .unwrap_or(self.default)
    }
}

/// Parameters of the follower (Layer-3) adaptive controller.
#[derive(Debug, Clone, PartialEq)]
pub struct FollowerParams {
    /// Adaptation rates `gamma_kp` (symmetric, positive).
    pub gamma: EdgeMap,
    /// Initial adaptive gains `alpha_kp(0) >= 0`.
    pub alpha0: EdgeMap,
    /// Component-wise deadband of the signum term, in m/s.
    pub sgn_deadband: f64,
}

/// Which control laws the engine applies to the non-malicious agents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControlMode {
    /// Leaders run the geometric containment law, followers the adaptive law.
    Hierarchical,
    /// Every agent, including `malicious_id`, runs the conventional law.
    AllNormal,
    /// The malicious agent keeps its falsified gains while every other agent
    /// runs the conventional law (negative control).
    NormalDefenders,
}

/// Complete description of one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub n_agents: usize,
    pub dim: usize,
    /// Sensing radius R.
    pub sensing_radius: f64,
    /// Potential ceiling E of the bounded pair potential.
    pub potential_ceiling: f64,
    pub malicious_id: usize,
    pub malicious: MaliciousParams,
    pub leader: LeaderParams,
    pub follower: FollowerParams,
    pub estimator: EstimatorGains,
    pub initial_states: Vec<AgentState>,
    pub dt: f64,
    pub t_end: f64,
    pub seed: u64,
    pub control_mode: ControlMode,
    /// Distance below which a `collision` event is emitted.
    pub collision_threshold: f64,
    /// Constant used by the whole-swarm energy monitor; taken from the
    /// spectral diagnostic when absent.
    pub alpha_bar: Option<f64>,
    /// Keep every `record_stride`-th step in the trajectory record.
    pub record_stride: usize,
}

impl ScenarioConfig {
    pub fn initial_positions(&self) -> Vec<Vector> {
        self.initial_states.iter().map(|s| s.position.clone()).collect()
    }

    /// Desired displacements resolved against the initial topology: when the
    /// scenario does not pin them explicitly, the regular-polygon generator
    /// assigns one vertex per leader (sorted by id, in angular order).
    pub fn resolved_displacements(&self) -> Result<BTreeMap<usize, Vector>> {
        if !self.leader.desired_displacements.is_empty() {
            return Ok(self.leader.desired_displacements.clone());
        }
        let graph = topology::build_graph(&self.initial_positions(), self.sensing_radius);
        let mut leaders: Vec<usize> = graph.neighbors(self.malicious_id).collect();
        leaders.sort_unstable();
        if leaders.len() < 2 {
            return Err(Error::PolygonTooSmall(leaders.len()));
        }
        let malicious = &self.initial_states[self.malicious_id];
        let orientation = match self.leader.orientation {
            Some(theta) => theta,
            None => {
                let first = &self.initial_states[leaders[0]];
                let rel = relative_position(first, malicious)?;
                rel[1].atan2(rel[0])
            }
        };
        let vertices =
            controllers::desired_polygon(leaders.len(), self.leader.delta_bar, orientation)?;
        Ok(leaders.into_iter().zip(vertices).collect())
    }
}

/// Outcome of [`validate_scenario`]: either a pass or a list of named
/// violations. Violations are data, not errors.
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn pass(&self) -> bool {
        self.violations.is_empty()
    }

    fn fail(&mut self, msg: impl Into<String>) {
        self.violations.push(msg.into());
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.pass() {
            write!(f, "pass")
        } else {
            for v in &self.violations {
                writeln!(f, "violation: {v}")?;
            }
            Ok(())
        }
    }
}

/// Check a scenario against Assumptions 1-4 and the structural invariants of
/// the control design.
pub fn validate_scenario(cfg: &ScenarioConfig) -> ValidationReport {
    let mut report = ValidationReport::default();
    structural_checks(cfg, &mut report);
    if !report.pass() {
        // Later checks assume a structurally sound scenario.
        return report;
    }

    let mp = &cfg.malicious;
    if mp.k_v_bound <= 0.0 || mp.k_a_bound <= 0.0 || mp.k_r_bound <= 0.0 {
        report.fail("Assumption 1: parameter bounds must be positive");
    }
    if mp.k_v.abs() > mp.k_v_bound {
        report.fail(format!(
            "Assumption 1: |k_v| = {} exceeds bound {}",
            mp.k_v.abs(),
            mp.k_v_bound
        ));
    }
    if mp.k_a.abs() > mp.k_a_bound {
        report.fail(format!(
            "Assumption 1: |k_a| = {} exceeds bound {}",
            mp.k_a.abs(),
            mp.k_a_bound
        ));
    }
    if mp.k_r.abs() > mp.k_r_bound {
        report.fail(format!(
            "Assumption 1: |k_r| = {} exceeds bound {}",
            mp.k_r.abs(),
            mp.k_r_bound
        ));
    }

    let positions = cfg.initial_positions();
    let graph = topology::build_graph(&positions, cfg.sensing_radius);

    let normal: Vec<usize> = (0..cfg.n_agents).filter(|&i| i != cfg.malicious_id).collect();
    match topology::is_connected(&graph, &normal) {
        Ok(true) => {}
        Ok(false) => report.fail("Assumption 2: initial graph on V \\ {i_f} is not connected"),
        Err(_) => report.fail("Assumption 2: no normal agents"),
    }

    let leaders: Vec<usize> = graph.neighbors(cfg.malicious_id).collect();
    if leaders.len() < 2 {
        report.fail(format!(
            "Assumption 3: malicious agent has {} neighbor(s) at t = 0, needs at least 2",
            leaders.len()
        ));
    }

    for (a, &i) in leaders.iter().enumerate() {
        for &j in &leaders[a + 1..] {
            if !graph.has_edge(i, j) {
                report.fail(format!(
                    "Assumption 4: leaders {i} and {j} are not mutual neighbors at t = 0"
                ));
            }
        }
    }

    let r = cfg.sensing_radius;
    if !(cfg.leader.delta_bar > 0.0 && cfg.leader.delta_bar < r / 2.0) {
        report.fail(format!(
            "delta_bar < R/2: delta_bar = {} not in (0, {})",
            cfg.leader.delta_bar,
            r / 2.0
        ));
    }
    if cfg.leader.kappa_v < 1.0 || cfg.leader.kappa_x < 1.0 {
        report.fail("leader gains kappa_v, kappa_x must be >= 1");
    }
    if cfg.leader.iota <= 0.0 {
        report.fail("leader potential constant iota must be positive");
    }

    match potentials::compute_bar_q(&cfg.initial_states, r) {
        Ok(bar_q) => {
            if cfg.potential_ceiling <= bar_q {
                report.fail(format!(
                    "E > Q_bar: E = {} does not exceed Q_bar = {bar_q}",
                    cfg.potential_ceiling
                ));
            }
        }
        Err(e) => report.fail(format!("E > Q_bar: cannot evaluate Q_bar ({e})")),
    }

    if leaders.len() >= 2 {
        match cfg.resolved_displacements() {
            Ok(disp) => check_displacements(cfg, &leaders, &disp, &mut report),
            Err(e) => report.fail(format!("desired displacements: {e}")),
        }
    }

    if cfg.follower.gamma.default <= 0.0
        || cfg.follower.gamma.overrides.iter().any(|(_, _, v)| *v <= 0.0)
    {
        report.fail("follower adaptation rates gamma must be positive");
    }
    if cfg.follower.alpha0.default < 0.0
        || cfg.follower.alpha0.overrides.iter().any(|(_, _, v)| *v < 0.0)
    {
        report.fail("follower initial gains alpha0 must be nonnegative");
    }
    if cfg.follower.sgn_deadband <= 0.0 {
        report.fail("sgn deadband must be positive");
    }
    if !cfg.estimator.is_valid() {
        report.fail("estimator gains: filter gain must be positive and Gamma_k symmetric positive definite");
    }

    report
}

fn structural_checks(cfg: &ScenarioConfig, report: &mut ValidationReport) {
    if cfg.n_agents < 4 {
        report.fail(format!(
            "swarm needs at least 4 agents for the full hierarchy, got {}",
            cfg.n_agents
        ));
    }
    if cfg.dim < 2 {
        report.fail(format!("dimension must be at least 2, got {}", cfg.dim));
    }
    if cfg.initial_states.len() != cfg.n_agents {
        report.fail(format!(
            "expected {} initial states, got {}",
            cfg.n_agents,
            cfg.initial_states.len()
        ));
    }
    if cfg.malicious_id >= cfg.n_agents {
        report.fail(format!("malicious_id {} out of range", cfg.malicious_id));
    }
    for (idx, s) in cfg.initial_states.iter().enumerate() {
        if s.id != idx {
            report.fail(format!("agent ids must be 0-based contiguous; slot {idx} has id {}", s.id));
        }
        if s.position.len() != cfg.dim || s.velocity.len() != cfg.dim {
            report.fail(format!("agent {idx} state dimension does not match m = {}", cfg.dim));
        }
        if s.position.iter().chain(s.velocity.iter()).any(|x| !x.is_finite()) {
            report.fail(format!("agent {idx} has non-finite state"));
        }
    }
    if !(cfg.dt > 0.0 && cfg.dt <= cfg.t_end) {
        report.fail(format!("need 0 < dt <= t_end, got dt = {}, t_end = {}", cfg.dt, cfg.t_end));
    }
    if cfg.sensing_radius <= 0.0 {
        report.fail("sensing radius must be positive");
    }
    if cfg.potential_ceiling <= 0.0 {
        report.fail("potential ceiling E must be positive");
    }
    if cfg.record_stride == 0 {
        report.fail("record_stride must be at least 1");
    }
}

fn check_displacements(
    cfg: &ScenarioConfig,
    leaders: &[usize],
    disp: &BTreeMap<usize, Vector>,
    report: &mut ValidationReport,
) {
    let delta_bar = cfg.leader.delta_bar;
    let tol = 1e-9 * delta_bar.max(1.0);
    for &j in leaders {
        if !disp.contains_key(&j) {
            report.fail(format!("desired displacements: leader {j} has none"));
        }
    }
    let mut sum = Vector::zeros(cfg.dim);
    for (j, d) in disp {
        if d.len() != cfg.dim {
            report.fail(format!("desired displacement for leader {j} has wrong dimension"));
            return;
        }
        if (d.norm() - delta_bar).abs() > tol {
            report.fail(format!(
                "desired displacements: |x*_{{i_f {j}}}| = {} differs from delta_bar = {delta_bar}",
                d.norm()
            ));
        }
        sum += d;
    }
    if sum.norm() > tol {
        report.fail(format!(
            "desired displacements: sum has norm {} (must vanish)",
            sum.norm()
        ));
    }
}
