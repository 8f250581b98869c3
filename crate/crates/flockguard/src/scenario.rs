//! Scenario files (versioned JSON mirror of [`ScenarioConfig`]), bundled
//! fixtures, and the randomized admissible-scenario generator.

use std::collections::BTreeMap;
use std::f64::consts::{PI, SQRT_2, TAU};
use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::estimator::EstimatorGains;
use crate::swarm::{
    AgentState, ControlMode, EdgeMap, FollowerParams, LeaderParams, MaliciousParams,
    ScenarioConfig, Vector,
};
use crate::{Error, Result};

pub const SCHEMA_VERSION: &str = "1";

fn default_schema_version() -> String {
    SCHEMA_VERSION.to_string()
}

fn default_iota() -> f64 {
    1.0
}

fn default_deadband() -> f64 {
    1e-3
}

fn default_collision_threshold() -> f64 {
    1e-2
}

fn default_record_stride() -> usize {
    1
}

fn default_filter_gain() -> f64 {
    10.0
}

fn default_gamma_k() -> [[f64; 3]; 3] {
    [[10.0, 0.0, 0.0], [0.0, 10.0, 0.0], [0.0, 0.0, 10.0]]
}

fn default_k_hat0() -> [f64; 3] {
    [1.0, 1.0, 1.0]
}

/// On-disk mirror of [`ScenarioConfig`]. Unknown keys are rejected so typos
/// surface as parse errors rather than silently ignored settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default = "default_schema_version")]
    pub schema_version: String,
    pub n_agents: usize,
    pub dim: usize,
    pub sensing_radius: f64,
    pub potential_ceiling: f64,
    pub malicious_id: usize,
    pub malicious: MaliciousFile,
    pub leader: LeaderFile,
    pub follower: FollowerFile,
    #[serde(default)]
    pub estimator: EstimatorFile,
    pub agents: Vec<AgentFile>,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub control_mode: ControlModeFile,
    #[serde(default = "default_collision_threshold")]
    pub collision_threshold: f64,
    #[serde(default)]
    pub alpha_bar: Option<f64>,
    #[serde(default = "default_record_stride")]
    pub record_stride: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaliciousFile {
    pub k_v: f64,
    pub k_a: f64,
    pub k_r: f64,
    pub k_v_bound: f64,
    pub k_a_bound: f64,
    pub k_r_bound: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeaderFile {
    pub kappa_v: f64,
    pub kappa_x: f64,
    pub delta_bar: f64,
    #[serde(default)]
    pub h_bar: Option<f64>,
    #[serde(default = "default_iota")]
    pub iota: f64,
    #[serde(default)]
    pub orientation: Option<f64>,
    #[serde(default)]
    pub desired_displacements: Vec<DisplacementFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisplacementFile {
    pub leader: usize,
    pub vector: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeMapFile {
    pub default: f64,
    #[serde(default)]
    pub overrides: Vec<(usize, usize, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FollowerFile {
    pub gamma: EdgeMapFile,
    pub alpha0: EdgeMapFile,
    #[serde(default = "default_deadband")]
    pub sgn_deadband: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorFile {
    #[serde(default = "default_filter_gain")]
    pub filter_gain: f64,
    #[serde(default = "default_gamma_k")]
    pub gamma_k: [[f64; 3]; 3],
    #[serde(default = "default_k_hat0")]
    pub k_hat0: [f64; 3],
}

impl Default for EstimatorFile {
    fn default() -> Self {
        Self {
            filter_gain: default_filter_gain(),
            gamma_k: default_gamma_k(),
            k_hat0: default_k_hat0(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentFile {
    pub id: usize,
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ControlModeFile {
    #[default]
    Hierarchical,
    AllNormal,
    NormalDefenders,
}

impl From<ControlModeFile> for ControlMode {
    fn from(m: ControlModeFile) -> Self {
        match m {
            ControlModeFile::Hierarchical => ControlMode::Hierarchical,
            ControlModeFile::AllNormal => ControlMode::AllNormal,
            ControlModeFile::NormalDefenders => ControlMode::NormalDefenders,
        }
    }
}

impl From<ControlMode> for ControlModeFile {
    fn from(m: ControlMode) -> Self {
        match m {
            ControlMode::Hierarchical => ControlModeFile::Hierarchical,
            ControlMode::AllNormal => ControlModeFile::AllNormal,
            ControlMode::NormalDefenders => ControlModeFile::NormalDefenders,
        }
    }
}

fn edge_map_from_file(f: &EdgeMapFile) -> EdgeMap {
    EdgeMap {
        default: f.default,
        overrides: f.overrides.clone(),
    }
}

fn edge_map_to_file(m: &EdgeMap) -> EdgeMapFile {
    EdgeMapFile {
        default: m.default,
        overrides: m.overrides.clone(),
    }
}

impl ScenarioFile {
    pub fn into_config(self) -> Result<ScenarioConfig> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::ScenarioFormat(format!(
                "unsupported schema_version {:?}, expected {:?}",
                self.schema_version, SCHEMA_VERSION
            )));
        }
        let desired_displacements: BTreeMap<usize, Vector> = self
            .leader
            .desired_displacements
            .iter()
            .map(|d| (d.leader, Vector::from_column_slice(&d.vector)))
            .collect();
        Ok(ScenarioConfig {
            n_agents: self.n_agents,
            dim: self.dim,
            sensing_radius: self.sensing_radius,
            potential_ceiling: self.potential_ceiling,
            malicious_id: self.malicious_id,
            malicious: MaliciousParams {
                k_v: self.malicious.k_v,
                k_a: self.malicious.k_a,
                k_r: self.malicious.k_r,
                k_v_bound: self.malicious.k_v_bound,
                k_a_bound: self.malicious.k_a_bound,
                k_r_bound: self.malicious.k_r_bound,
            },
            leader: LeaderParams {
                kappa_v: self.leader.kappa_v,
                kappa_x: self.leader.kappa_x,
                delta_bar: self.leader.delta_bar,
                h_bar: self.leader.h_bar,
                iota: self.leader.iota,
                orientation: self.leader.orientation,
                desired_displacements,
            },
            follower: FollowerParams {
                gamma: edge_map_from_file(&self.follower.gamma),
                alpha0: edge_map_from_file(&self.follower.alpha0),
                sgn_deadband: self.follower.sgn_deadband,
            },
            estimator: EstimatorGains {
                filter_gain: self.estimator.filter_gain,
                gamma_k: Matrix3::from_fn(|r, c| self.estimator.gamma_k[r][c]),
                k_hat0: Vector3::new(
                    self.estimator.k_hat0[0],
                    self.estimator.k_hat0[1],
                    self.estimator.k_hat0[2],
                ),
            },
            initial_states: self
                .agents
                .iter()
                .map(|a| {
                    AgentState::new(
                        a.id,
                        Vector::from_column_slice(&a.position),
                        Vector::from_column_slice(&a.velocity),
                    )
                })
                .collect(),
            dt: self.dt,
            t_end: self.t_end,
            seed: self.seed,
            control_mode: self.control_mode.into(),
            collision_threshold: self.collision_threshold,
            alpha_bar: self.alpha_bar,
            record_stride: self.record_stride,
        })
    }

    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.to_string(),
            n_agents: cfg.n_agents,
            dim: cfg.dim,
            sensing_radius: cfg.sensing_radius,
            potential_ceiling: cfg.potential_ceiling,
            malicious_id: cfg.malicious_id,
            malicious: MaliciousFile {
                k_v: cfg.malicious.k_v,
                k_a: cfg.malicious.k_a,
                k_r: cfg.malicious.k_r,
                k_v_bound: cfg.malicious.k_v_bound,
                k_a_bound: cfg.malicious.k_a_bound,
                k_r_bound: cfg.malicious.k_r_bound,
            },
            leader: LeaderFile {
                kappa_v: cfg.leader.kappa_v,
                kappa_x: cfg.leader.kappa_x,
                delta_bar: cfg.leader.delta_bar,
                h_bar: cfg.leader.h_bar,
                iota: cfg.leader.iota,
                orientation: cfg.leader.orientation,
                desired_displacements: cfg
                    .leader
                    .desired_displacements
                    .iter()
                    .map(|(j, v)| DisplacementFile {
                        leader: *j,
                        vector: v.iter().copied().collect(),
                    })
                    .collect(),
            },
            follower: FollowerFile {
                gamma: edge_map_to_file(&cfg.follower.gamma),
                alpha0: edge_map_to_file(&cfg.follower.alpha0),
                sgn_deadband: cfg.follower.sgn_deadband,
            },
            estimator: EstimatorFile {
                filter_gain: cfg.estimator.filter_gain,
                gamma_k: [
                    [
                        cfg.estimator.gamma_k[(0, 0)],
                        cfg.estimator.gamma_k[(0, 1)],
                        cfg.estimator.gamma_k[(0, 2)],
                    ],
                    [
                        cfg.estimator.gamma_k[(1, 0)],
                        cfg.estimator.gamma_k[(1, 1)],
                        cfg.estimator.gamma_k[(1, 2)],
                    ],
                    [
                        cfg.estimator.gamma_k[(2, 0)],
                        cfg.estimator.gamma_k[(2, 1)],
                        cfg.estimator.gamma_k[(2, 2)],
                    ],
                ],
                k_hat0: [
                    cfg.estimator.k_hat0[0],
                    cfg.estimator.k_hat0[1],
                    cfg.estimator.k_hat0[2],
                ],
            },
            agents: cfg
                .initial_states
                .iter()
                .map(|s| AgentFile {
                    id: s.id,
                    position: s.position.iter().copied().collect(),
                    velocity: s.velocity.iter().copied().collect(),
                })
                .collect(),
            dt: cfg.dt,
            t_end: cfg.t_end,
            seed: cfg.seed,
            control_mode: cfg.control_mode.into(),
            collision_threshold: cfg.collision_threshold,
            alpha_bar: cfg.alpha_bar,
            record_stride: cfg.record_stride,
        }
    }
}

/// Parse a scenario from a JSON string.
pub fn from_json_str(s: &str) -> Result<ScenarioConfig> {
    let file: ScenarioFile =
        serde_json::from_str(s).map_err(|e| Error::ScenarioFormat(e.to_string()))?;
    file.into_config()
}

/// Parse a scenario file from disk. Structural/schema problems surface as
/// [`Error::ScenarioFormat`]; assumption violations are reported separately
/// by `validate_scenario`.
pub fn parse_scenario(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)?;
    from_json_str(&text)
}

/// Serialize a scenario to pretty JSON with every key present.
pub fn to_json_string(cfg: &ScenarioConfig) -> String {
    serde_json::to_string_pretty(&ScenarioFile::from_config(cfg))
        .expect("scenario serialization cannot fail")
}

pub fn write_scenario(cfg: &ScenarioConfig, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, to_json_string(cfg) + "\n")?;
    Ok(())
}

/// Sensing radius of the demonstration scenario, `18 sqrt(2)` m.
pub const SIV_RADIUS: f64 = 18.0 * SQRT_2;

/// The 13-agent demonstration scenario: malicious agent 6 at the center with
/// `k = (0.8, 0, 450000)`, four leaders near the designed square at
/// `delta_bar = 12` m, eight followers on an outer ring, and initial speeds
/// in `(27, 35)` m/s at headings in `(pi/6, pi/4)`.
pub fn siv_fixture() -> ScenarioConfig {
    let n = 13;
    let seed = 42u64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let leader_ids = [2usize, 5, 7, 10];
    let follower_ids = [0usize, 1, 3, 4, 8, 9, 11, 12];
    let mut positions = vec![Vector::zeros(2); n];
    for (t, &id) in leader_ids.iter().enumerate() {
        let theta = PI / 4.0 + TAU * t as f64 / 4.0;
        positions[id] = Vector::from_column_slice(&[12.2 * theta.cos(), 12.2 * theta.sin()]);
    }
    for (t, &id) in follower_ids.iter().enumerate() {
        let theta = TAU * t as f64 / 8.0;
        positions[id] = Vector::from_column_slice(&[30.0 * theta.cos(), 30.0 * theta.sin()]);
    }

    let states = (0..n)
        .map(|id| {
            let speed = rng.gen_range(27.0..35.0);
            let heading = rng.gen_range(PI / 6.0..PI / 4.0);
            AgentState::new(
                id,
                positions[id].clone(),
                Vector::from_column_slice(&[speed * heading.cos(), speed * heading.sin()]),
            )
        })
        .collect();

    ScenarioConfig {
        n_agents: n,
        dim: 2,
        sensing_radius: SIV_RADIUS,
        potential_ceiling: 20000.0,
        malicious_id: 6,
        malicious: MaliciousParams {
            k_v: 0.8,
            k_a: 0.0,
            k_r: 450000.0,
            k_v_bound: 10.0,
            k_a_bound: 10.0,
            k_r_bound: 1e6,
        },
        leader: LeaderParams {
            kappa_v: 6.0,
            kappa_x: 2.0,
            delta_bar: 12.0,
            h_bar: None,
            iota: 1.0,
            orientation: None,
            desired_displacements: BTreeMap::new(),
        },
        follower: FollowerParams {
            gamma: EdgeMap::uniform(1.0),
            alpha0: EdgeMap::uniform(1.0),
            sgn_deadband: 1e-3,
        },
        // Per-channel adaptation gains sized to the falsified-gain scales: a
        // small velocity/attraction gain keeps the estimate excursion bounded
        // through the initial transient, and the repulsion gain keeps
        // k_r_tilde^2 / (2 gamma_r) — the dominant term of H(0) — finite.
        estimator: EstimatorGains {
            gamma_k: Matrix3::from_diagonal(&Vector3::new(0.01, 0.01, 1e3)),
            ..EstimatorGains::default()
        },
        initial_states: states,
        dt: 1e-3,
        t_end: 20.0,
        seed,
        control_mode: ControlMode::Hierarchical,
        collision_threshold: 1e-2,
        alpha_bar: None,
        record_stride: 100,
    }
}

/// Malicious agent plus four leaders exactly on the designed square with a
/// common velocity: the whole group is at the Lemma-1 equilibrium.
pub fn balanced_group_fixture() -> ScenarioConfig {
    let delta_bar = 12.0;
    let mut states = vec![AgentState::new(
        0,
        Vector::zeros(2),
        Vector::from_column_slice(&[1.0, -2.0]),
    )];
    for t in 0..4 {
        let theta = TAU * t as f64 / 4.0;
        states.push(AgentState::new(
            t + 1,
            Vector::from_column_slice(&[delta_bar * theta.cos(), delta_bar * theta.sin()]),
            Vector::from_column_slice(&[1.0, -2.0]),
        ));
    }
    ScenarioConfig {
        n_agents: 5,
        dim: 2,
        sensing_radius: SIV_RADIUS,
        potential_ceiling: 20000.0,
        malicious_id: 0,
        malicious: MaliciousParams {
            k_v: 0.8,
            k_a: 0.0,
            k_r: 450000.0,
            k_v_bound: 10.0,
            k_a_bound: 10.0,
            k_r_bound: 1e6,
        },
        leader: LeaderParams {
            kappa_v: 6.0,
            kappa_x: 2.0,
            delta_bar,
            h_bar: None,
            iota: 1.0,
            orientation: None,
            desired_displacements: BTreeMap::new(),
        },
        follower: FollowerParams {
            gamma: EdgeMap::uniform(1.0),
            alpha0: EdgeMap::uniform(0.0),
            sgn_deadband: 1e-3,
        },
        estimator: EstimatorGains::default(),
        initial_states: states,
        dt: 1e-3,
        t_end: 1.0,
        seed: 0,
        control_mode: ControlMode::Hierarchical,
        collision_threshold: 1e-2,
        alpha_bar: None,
        record_stride: 1,
    }
}

/// Four agents at rest shape-wise: malicious at the origin, two leaders at
/// the antipodal displacements, one follower exactly at the pair-potential
/// minimum distance from leader 1 and out of range of everyone else.
pub fn balanced_swarm_fixture() -> ScenarioConfig {
    let v = Vector::from_column_slice(&[2.0, 1.0]);
    let states = vec![
        AgentState::new(0, Vector::zeros(2), v.clone()),
        AgentState::new(1, Vector::from_column_slice(&[12.0, 0.0]), v.clone()),
        AgentState::new(2, Vector::from_column_slice(&[-12.0, 0.0]), v.clone()),
        AgentState::new(3, Vector::from_column_slice(&[30.0, 0.0]), v),
    ];
    ScenarioConfig {
        n_agents: 4,
        dim: 2,
        sensing_radius: SIV_RADIUS,
        potential_ceiling: 20000.0,
        malicious_id: 0,
        malicious: MaliciousParams {
            k_v: 0.8,
            k_a: 0.0,
            k_r: 450000.0,
            k_v_bound: 10.0,
            k_a_bound: 10.0,
            k_r_bound: 1e6,
        },
        leader: LeaderParams {
            kappa_v: 6.0,
            kappa_x: 2.0,
            delta_bar: 12.0,
            h_bar: None,
            iota: 1.0,
            orientation: None,
            desired_displacements: BTreeMap::new(),
        },
        follower: FollowerParams {
            gamma: EdgeMap::uniform(1.0),
            alpha0: EdgeMap::uniform(1.0),
            sgn_deadband: 1e-3,
        },
        estimator: EstimatorGains::default(),
        initial_states: states,
        dt: 1e-3,
        t_end: 1.0,
        seed: 0,
        control_mode: ControlMode::Hierarchical,
        collision_threshold: 1e-2,
        alpha_bar: None,
        record_stride: 1,
    }
}

/// Negative control: the malicious agent has a single neighbor and a huge
/// repulsion gain, so the neighbor is blasted out of sensing range. Violates
/// Assumption 3 on purpose; run with the `--force` path and the
/// normal-defenders mode.
pub fn escape_fixture() -> ScenarioConfig {
    let states = vec![
        AgentState::new(0, Vector::zeros(2), Vector::zeros(2)),
        AgentState::new(1, Vector::from_column_slice(&[12.0, 0.0]), Vector::zeros(2)),
        AgentState::new(2, Vector::from_column_slice(&[12.0, 24.0]), Vector::zeros(2)),
        AgentState::new(3, Vector::from_column_slice(&[12.0, 48.0]), Vector::zeros(2)),
    ];
    ScenarioConfig {
        n_agents: 4,
        dim: 2,
        sensing_radius: SIV_RADIUS,
        potential_ceiling: 20000.0,
        malicious_id: 0,
        malicious: MaliciousParams {
            k_v: 0.8,
            k_a: 0.0,
            k_r: 450000.0,
            k_v_bound: 10.0,
            k_a_bound: 10.0,
            k_r_bound: 1e6,
        },
        leader: LeaderParams {
            kappa_v: 6.0,
            kappa_x: 2.0,
            delta_bar: 12.0,
            h_bar: Some(100.0),
            iota: 1.0,
            orientation: None,
            desired_displacements: BTreeMap::new(),
        },
        follower: FollowerParams {
            gamma: EdgeMap::uniform(1.0),
            alpha0: EdgeMap::uniform(0.0),
            sgn_deadband: 1e-3,
        },
        estimator: EstimatorGains::default(),
        initial_states: states,
        dt: 1e-5,
        t_end: 0.1,
        seed: 0,
        control_mode: ControlMode::NormalDefenders,
        collision_threshold: 1e-2,
        alpha_bar: None,
        record_stride: 100,
    }
}

/// Randomized scenario satisfying Assumptions 1-4 and the ceiling
/// conditions: leaders jittered around a regular polygon, followers on an
/// outer ring angularly attached to leaders, moderate falsified gains, and a
/// common base velocity with small per-agent perturbations.
/// Six normal agents — a pentagon of radius 12 around a center — forming a
/// complete proximity graph, with a small random velocity disagreement. Used
/// as the all-normal flocking baseline; the designated "malicious" id is just
/// the center and every agent runs the normal law.
pub fn baseline_fixture() -> ScenarioConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let base_v = Vector::from_column_slice(&[6.0, 4.5]);
    let mut states = Vec::new();
    for id in 0..6usize {
        let position = if id == 0 {
            Vector::zeros(2)
        } else {
            let theta = TAU * (id - 1) as f64 / 5.0;
            Vector::from_column_slice(&[12.0 * theta.cos(), 12.0 * theta.sin()])
        };
        let velocity = &base_v
            + Vector::from_column_slice(&[rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)]);
        states.push(AgentState::new(id, position, velocity));
    }
    ScenarioConfig {
        n_agents: 6,
        dim: 2,
        sensing_radius: SIV_RADIUS,
        potential_ceiling: 20000.0,
        malicious_id: 0,
        malicious: MaliciousParams {
            k_v: 1.0,
            k_a: 1.0,
            k_r: 1.0,
            k_v_bound: 10.0,
            k_a_bound: 10.0,
            k_r_bound: 1e6,
        },
        leader: LeaderParams {
            kappa_v: 6.0,
            kappa_x: 2.0,
            delta_bar: 12.0,
            h_bar: None,
            iota: 1.0,
            orientation: None,
            desired_displacements: BTreeMap::new(),
        },
        follower: FollowerParams {
            gamma: EdgeMap::uniform(1.0),
            alpha0: EdgeMap::uniform(1.0),
            sgn_deadband: 1e-3,
        },
        estimator: EstimatorGains::default(),
        initial_states: states,
        dt: 1e-3,
        t_end: 30.0,
        seed: 11,
        control_mode: ControlMode::AllNormal,
        collision_threshold: 1e-2,
        alpha_bar: None,
        record_stride: 100,
    }
}

pub fn random_admissible(seed: u64) -> ScenarioConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = SIV_RADIUS;
    let s = rng.gen_range(3..=4usize);
    let n_followers = rng.gen_range(s..=2 * s);
    let n = 1 + s + n_followers;
    // Keep the polygon large enough that a follower resting at the pair
    // equilibrium distance delta from its leader stays outside the malicious
    // agent's sensing range for the whole run.
    let delta_bar = rng.gen_range(9.5..0.45 * r);
    let orientation = rng.gen_range(0.0..TAU);
    // Minimum of the bounded pair potential.
    let pot_delta = r / SQRT_2;

    let base_speed = rng.gen_range(5.0..10.0);
    let base_heading = rng.gen_range(0.0..TAU);
    let base_v = Vector::from_column_slice(&[
        base_speed * base_heading.cos(),
        base_speed * base_heading.sin(),
    ]);
    let velocity = |rng: &mut ChaCha8Rng| {
        &base_v
            + Vector::from_column_slice(&[rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)])
    };

    // Agent 0 is malicious; 1..=s are leaders; the rest are followers.
    let mut states = vec![AgentState::new(0, Vector::zeros(2), velocity(&mut rng))];
    for t in 0..s {
        let theta = orientation + TAU * t as f64 / s as f64 + rng.gen_range(-0.02..0.02);
        let radius = delta_bar * rng.gen_range(0.97..1.03);
        states.push(AgentState::new(
            t + 1,
            Vector::from_column_slice(&[radius * theta.cos(), radius * theta.sin()]),
            velocity(&mut rng),
        ));
    }
    for f in 0..n_followers {
        // Attach each follower angularly near leader (f mod s) so the
        // leader-follower edge exists while staying outside the malicious
        // agent's range. Followers of the same leader are fanned out at fixed
        // angular spacing so no two start on top of each other.
        let t = f % s;
        let rank = (f / s) as f64;
        let fan = (rank - 0.5) * 0.25;
        let theta =
            orientation + TAU * t as f64 / s as f64 + fan + rng.gen_range(-0.05..0.05);
        // Start at the pair equilibrium distance from the leader so the
        // follower neither drifts into the malicious agent's range nor forms
        // new edges near R, where the potential wall is steep.
        let radius = delta_bar + pot_delta;
        states.push(AgentState::new(
            1 + s + f,
            Vector::from_column_slice(&[radius * theta.cos(), radius * theta.sin()]),
            velocity(&mut rng),
        ));
    }

    let bar_q = crate::potentials::compute_bar_q(&states, r).expect("generator keeps pairs apart");

    ScenarioConfig {
        n_agents: n,
        dim: 2,
        sensing_radius: r,
        potential_ceiling: 2.0 * (bar_q + 1.0),
        malicious_id: 0,
        malicious: MaliciousParams {
            k_v: rng.gen_range(0.1..2.0),
            k_a: rng.gen_range(-2.0..2.0),
            k_r: rng.gen_range(0.0..50.0),
            k_v_bound: 10.0,
            k_a_bound: 10.0,
            k_r_bound: 1e6,
        },
        leader: LeaderParams {
            kappa_v: 6.0,
            kappa_x: 2.0,
            delta_bar,
            h_bar: None,
            iota: 1.0,
            orientation: None,
            desired_displacements: BTreeMap::new(),
        },
        follower: FollowerParams {
            gamma: EdgeMap::uniform(1.0),
            alpha0: EdgeMap::uniform(1.0),
            sgn_deadband: 1e-3,
        },
        estimator: EstimatorGains::default(),
        initial_states: states,
        dt: 1e-3,
        t_end: 1.0,
        seed,
        control_mode: ControlMode::Hierarchical,
        collision_threshold: 1e-2,
        alpha_bar: None,
        record_stride: 10,
    }
}
