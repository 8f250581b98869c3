//! Proximity graph, hierarchical layer partition, and the spectral /
//! rigidity diagnostics used by the convergence analysis.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use nalgebra::DMatrix;

use crate::swarm::Vector;
use crate::{Error, Result};

/// Undirected proximity graph: `(i, j)` is an edge iff `0 < |x_ij| < R` at
/// build time.
#[derive(Debug, Clone, PartialEq)]
pub struct ProximityGraph {
    pub n: usize,
    pub radius: f64,
    adjacency: Vec<bool>,
}

impl ProximityGraph {
    pub fn empty(n: usize, radius: f64) -> Self {
        Self {
            n,
            radius,
            adjacency: vec![false; n * n],
        }
    }

    pub fn add_edge(&mut self, i: usize, j: usize) {
        assert!(i != j && i < self.n && j < self.n);
        self.adjacency[i * self.n + j] = true;
        self.adjacency[j * self.n + i] = true;
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i != j && self.adjacency[i * self.n + j]
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&j| self.has_edge(i, j))
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors(i).count()
    }

    /// All edges as ordered pairs `(i, j)` with `i < j`.
    pub fn edges(&self) -> BTreeSet<(usize, usize)> {
        let mut set = BTreeSet::new();
        for i in 0..self.n {
            for j in i + 1..self.n {
                if self.has_edge(i, j) {
                    set.insert((i, j));
                }
            }
        }
        set
    }
}

/// Build the proximity graph from agent positions with exact threshold
/// semantics: strict inequalities on both sides.
pub fn build_graph(positions: &[Vector], radius: f64) -> ProximityGraph {
    let n = positions.len();
    let mut g = ProximityGraph::empty(n, radius);
    for i in 0..n {
        for j in i + 1..n {
            let d = (&positions[i] - &positions[j]).norm();
            if d > 0.0 && d < radius {
                g.add_edge(i, j);
            }
        }
    }
    g
}

/// The three-layer split around the malicious agent: Layer 1 is the
/// malicious agent itself, Layer 2 its neighbors (the leaders), Layer 3
/// everyone else (the followers).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerPartition {
    pub malicious: usize,
    pub leaders: BTreeSet<usize>,
    pub followers: BTreeSet<usize>,
}

impl LayerPartition {
    /// The group `V_g = {i_f} + N(i_f)`.
    pub fn group(&self) -> BTreeSet<usize> {
        let mut g = self.leaders.clone();
        g.insert(self.malicious);
        g
    }

    pub fn is_leader(&self, i: usize) -> bool {
        self.leaders.contains(&i)
    }

    pub fn is_follower(&self, i: usize) -> bool {
        self.followers.contains(&i)
    }
}

pub fn layer_partition(graph: &ProximityGraph, malicious: usize) -> LayerPartition {
    let leaders: BTreeSet<usize> = graph.neighbors(malicious).collect();
    let followers = (0..graph.n)
        .filter(|&i| i != malicious && !leaders.contains(&i))
        .collect();
    LayerPartition {
        malicious,
        leaders,
        followers,
    }
}

/// Breadth-first connectivity of the subgraph induced by `subset`.
pub fn is_connected(graph: &ProximityGraph, subset: &[usize]) -> Result<bool> {
    if subset.is_empty() {
        return Err(Error::EmptySubset);
    }
    let members: BTreeSet<usize> = subset.iter().copied().collect();
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::new();
    let start = subset[0];
    seen.insert(start);
    queue.push_back(start);
    while let Some(i) = queue.pop_front() {
        for j in graph.neighbors(i) {
            if members.contains(&j) && seen.insert(j) {
                queue.push_back(j);
            }
        }
    }
    Ok(seen.len() == members.len())
}

/// Laplacian of the subgraph induced by `subset`, rows/columns in the order
/// of `subset`.
pub fn laplacian(graph: &ProximityGraph, subset: &[usize]) -> DMatrix<f64> {
    let n = subset.len();
    let mut l = DMatrix::zeros(n, n);
    for (a, &i) in subset.iter().enumerate() {
        for (b, &j) in subset.iter().enumerate() {
            if a != b && graph.has_edge(i, j) {
                l[(a, b)] = -1.0;
                l[(a, a)] += 1.0;
            }
        }
    }
    l
}

/// Follower block of one leader: the Laplacian `L_j` of the followers
/// reachable from leader `j`, the 0/1 leader-adjacency diagonal, and the
/// positive-definite sum `R_j = L_j + Lambda_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct LeaderFollowerMatrix {
    /// Followers in `F(j)`, sorted by id; matrix rows follow this order.
    pub followers: Vec<usize>,
    pub laplacian: DMatrix<f64>,
    pub leader_adjacency: DMatrix<f64>,
    pub r_matrix: DMatrix<f64>,
    pub lambda_min: f64,
}

/// Followers reachable from leader `j` through follower-follower edges,
/// seeded by the followers directly adjacent to `j`.
pub fn reachable_followers(
    graph: &ProximityGraph,
    leader: usize,
    followers: &BTreeSet<usize>,
) -> Vec<usize> {
    let mut seen = BTreeSet::new();
    let mut queue: VecDeque<usize> = graph
        .neighbors(leader)
        .filter(|i| followers.contains(i))
        .collect();
    for &i in &queue {
        seen.insert(i);
    }
    while let Some(i) = queue.pop_front() {
        for p in graph.neighbors(i) {
            if followers.contains(&p) && seen.insert(p) {
                queue.push_back(p);
            }
        }
    }
    seen.into_iter().collect()
}

pub fn leader_follower_matrix(
    graph: &ProximityGraph,
    leader: usize,
    followers: &BTreeSet<usize>,
) -> Result<LeaderFollowerMatrix> {
    let f_j = reachable_followers(graph, leader, followers);
    if f_j.is_empty() {
        return Err(Error::NoFollowers { leader });
    }
    let l = laplacian(graph, &f_j);
    let mut lambda = DMatrix::zeros(f_j.len(), f_j.len());
    for (a, &i) in f_j.iter().enumerate() {
        if graph.has_edge(leader, i) {
            lambda[(a, a)] = 1.0;
        }
    }
    let r = &l + &lambda;
    let lambda_min = r.clone().symmetric_eigen().eigenvalues.min();
    Ok(LeaderFollowerMatrix {
        followers: f_j,
        laplacian: l,
        leader_adjacency: lambda,
        r_matrix: r,
        lambda_min,
    })
}

/// Every leader that reaches at least one follower, with its block.
pub fn follower_groups(
    graph: &ProximityGraph,
    partition: &LayerPartition,
) -> Vec<(usize, LeaderFollowerMatrix)> {
    partition
        .leaders
        .iter()
        .filter_map(|&j| leader_follower_matrix(graph, j, &partition.followers).ok().map(|m| (j, m)))
        .collect()
}

/// Outcome of the rigidity-rank diagnostic.
#[derive(Debug, Clone, PartialEq)]
pub struct RigidityReport {
    pub rank: usize,
    /// Generic rank `m d - m(m+1)/2` for `d` vertices in dimension `m`.
    pub expected: usize,
    pub degenerate: bool,
}

/// Rank of the rigidity matrix of the stacked displacement errors
/// `|x_ij - x*_ij|` over the given edges. `displacements` maps an edge
/// `(i, j)` with `i < j` to `x*_ij`; missing edges use `x* = 0`, which
/// recovers the classical distance rigidity matrix.
pub fn rigidity_rank(
    positions: &[Vector],
    edges: &BTreeSet<(usize, usize)>,
    displacements: &BTreeMap<(usize, usize), Vector>,
) -> RigidityReport {
    let d = positions.len();
    let m = if d > 0 { positions[0].len() } else { 0 };
    let mut mat = DMatrix::zeros(edges.len(), d * m);
    for (row, &(i, j)) in edges.iter().enumerate() {
        let x_ij = &positions[i] - &positions[j];
        let err = match displacements.get(&(i, j)) {
            Some(star) => x_ij - star,
            None => x_ij,
        };
        let norm = err.norm();
        if norm == 0.0 {
            // Zero error direction: the row is undefined, leave it zero.
            continue;
        }
        let u = err / norm;
        for c in 0..m {
            mat[(row, i * m + c)] = u[c];
            mat[(row, j * m + c)] = -u[c];
        }
    }
    let svd = mat.svd(false, false);
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let threshold = 1e-8 * sigma_max.max(1e-300);
    let rank = svd.singular_values.iter().filter(|&&s| s > threshold).count();
    let expected = m * d - m * (m + 1) / 2;
    RigidityReport {
        rank,
        expected,
        degenerate: rank < expected,
    }
}
