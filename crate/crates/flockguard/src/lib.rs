//! Flocking control of a double-integrator swarm that contains a malicious
//! agent instead of excluding it.
//!
//! The malicious agent falsifies its controller gains `(k_v, k_a, k_r)`,
//! unbalancing the attraction/repulsion forces it exerts on the swarm. The
//! defense is hierarchical: the malicious agent's neighbors (leaders) are
//! steered onto a regular polygon around it so the falsified forces cancel,
//! while the remaining agents (followers) run an adaptive sliding-gain
//! consensus law. A pair of first-order filters turns the malicious dynamics
//! into a linear regression, which an adaptive estimator uses to compensate
//! for the unknown gains.
//!
//! The crate is organized as a library plus a thin `flockguard` binary:
//!
//! * [`swarm`] — domain types, vector math, scenario validation
//! * [`topology`] — proximity graph, layer partition, spectral diagnostics
//! * [`potentials`] — bounded pair potential, leader potential, energy bounds
//! * [`controllers`] — normal / malicious / leader / follower control laws
//! * [`estimator`] — low-pass filters and the parameter estimate update
//! * [`engine`] — coupled fixed-step integration, energy monitors, events
//! * [`scenario`] — JSON scenario files and bundled fixtures
//! * [`output`] — CSV/JSON result bundles
//! * [`cli`] — the command-line front end used by the binary

pub mod cli;
pub mod controllers;
pub mod engine;
pub mod estimator;
pub mod output;
pub mod potentials;
pub mod scenario;
pub mod swarm;
pub mod topology;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("singular pair distance {dist} for agents {i} and {j} (valid range is (0, {radius}))")]
    SingularDistance {
        i: usize,
        j: usize,
        dist: f64,
        radius: f64,
    },
    #[error("distance {0} outside the potential's domain [0, {1}]")]
    DistanceOutOfRange(f64, f64),
    #[error("scenario validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),
    #[error("numerical abort at t = {time}: {reason}")]
    NumericalAbort { time: f64, reason: String },
    #[error("empty vertex subset")]
    EmptySubset,
    #[error("leader {leader} has no reachable followers")]
    NoFollowers { leader: usize },
    #[error("desired polygon needs at least 2 vertices, got {0}")]
    PolygonTooSmall(usize),
    #[error("invalid scenario file: {0}")]
    ScenarioFormat(String),
    #[error("missing desired displacement for agent {0}")]
    MissingDisplacement(usize),
    #[error("invalid step size {0}")]
    InvalidStep(f64),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
