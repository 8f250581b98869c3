//! Potential functions and their gradients: the bounded pair potential with
//! its attraction/repulsion split, the falsified malicious potential, the
//! displacement-based leader potential, and the energy bounds used to size
//! the potential ceilings.

use std::collections::BTreeMap;

use nalgebra::{Matrix3, Vector3};

use crate::swarm::{AgentState, Vector};
use crate::topology::ProximityGraph;
use crate::{Error, Result};

/// Value of the bounded pair potential split into its attraction and
/// repulsion parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairPotential {
    pub attraction: f64,
    pub repulsion: f64,
    pub total: f64,
}

/// Bounded pair potential with ceiling `E` on `[0, R]`.
///
/// `V(d) = V_a(d) + V_r(d)` with
/// `V_a = d^2 / (R^2 - d^2 + R^2/E)` and `V_r = (R^2 - d^2) / (d^2 + R^2/E)`.
/// The value equals `E` at both endpoints and the global minimum sits at
/// `delta = R / sqrt(2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundedPotential {
    pub radius: f64,
    pub ceiling: f64,
}

impl BoundedPotential {
    pub fn new(radius: f64, ceiling: f64) -> Self {
        assert!(radius > 0.0 && ceiling > 0.0);
        Self { radius, ceiling }
    }

    /// Distance of the potential minimum, `sqrt(2) R / 2`.
    pub fn delta(&self) -> f64 {
        self.radius * std::f64::consts::FRAC_1_SQRT_2
    }

    fn reg(&self) -> f64 {
        self.radius * self.radius / self.ceiling
    }

    pub fn v_pair(&self, d: f64) -> Result<PairPotential> {
        if !(0.0..=self.radius).contains(&d) {
            return Err(Error::DistanceOutOfRange(d, self.radius));
        }
        let r2 = self.radius * self.radius;
        let c = self.reg();
        let d2 = d * d;
        let attraction = d2 / (r2 - d2 + c);
        let repulsion = (r2 - d2) / (d2 + c);
        Ok(PairPotential {
            attraction,
            repulsion,
            total: attraction + repulsion,
        })
    }

    /// Radial derivative of the attraction part.
    pub fn d_attraction(&self, d: f64) -> f64 {
        let r2 = self.radius * self.radius;
        let c = self.reg();
        let den = r2 - d * d + c;
        2.0 * d * (r2 + c) / (den * den)
    }

    /// Radial derivative of the repulsion part.
    pub fn d_repulsion(&self, d: f64) -> f64 {
        let r2 = self.radius * self.radius;
        let c = self.reg();
        let den = d * d + c;
        -2.0 * d * (r2 + c) / (den * den)
    }

    fn check_open_interval(&self, i: usize, j: usize, d: f64) -> Result<()> {
        if d <= 0.0 || d >= self.radius {
            return Err(Error::SingularDistance {
                i,
                j,
                dist: d,
                radius: self.radius,
            });
        }
        Ok(())
    }

    /// Gradient of the attraction part with respect to `x_ij`.
    pub fn grad_attraction(&self, x_ij: &Vector) -> Result<Vector> {
        let d = x_ij.norm();
        self.check_open_interval(0, 0, d)?;
        Ok(x_ij * (self.d_attraction(d) / d))
    }

    /// Gradient of the repulsion part with respect to `x_ij`.
    pub fn grad_repulsion(&self, x_ij: &Vector) -> Result<Vector> {
        let d = x_ij.norm();
        self.check_open_interval(0, 0, d)?;
        Ok(x_ij * (self.d_repulsion(d) / d))
    }

    /// Gradient of the full pair potential with respect to `x_ij`.
    pub fn grad_v_pair(&self, x_ij: &Vector) -> Result<Vector> {
        let d = x_ij.norm();
        self.check_open_interval(0, 0, d)?;
        Ok(x_ij * ((self.d_attraction(d) + self.d_repulsion(d)) / d))
    }

    /// Gradient of the falsified potential `k_a V_a + k_r V_r`.
    pub fn tilde_v_grad(&self, x_ij: &Vector, k_a: f64, k_r: f64) -> Result<Vector> {
        let d = x_ij.norm();
        self.check_open_interval(0, 0, d)?;
        Ok(x_ij * ((k_a * self.d_attraction(d) + k_r * self.d_repulsion(d)) / d))
    }
}

/// Leader pair potential: nonnegative, zero exactly at the desired
/// displacement `x*`, and above `H_bar` at the collision/escape boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct LeaderPotential {
    pub radius: f64,
    pub h_bar: f64,
    pub iota: f64,
    pub x_star: Vector,
}

impl LeaderPotential {
    pub fn new(radius: f64, h_bar: f64, iota: f64, x_star: Vector) -> Self {
        let delta = x_star.norm();
        assert!(delta > 0.0 && delta < radius, "need 0 < |x*| < R");
        assert!(iota > 0.0);
        Self {
            radius,
            h_bar,
            iota,
            x_star,
        }
    }

    fn delta(&self) -> f64 {
        self.x_star.norm()
    }

    fn denominators(&self, d: f64) -> (f64, f64) {
        let delta = self.delta();
        let reg = self.h_bar + self.iota;
        let a = self.radius - d + (self.radius - delta) * (self.radius - delta) / reg;
        let b = d + delta * delta / reg;
        (a, b)
    }

    pub fn value(&self, x_ij: &Vector) -> Result<f64> {
        let d = x_ij.norm();
        if !(0.0..=self.radius).contains(&d) {
            return Err(Error::DistanceOutOfRange(d, self.radius));
        }
        let e2 = (x_ij - &self.x_star).norm_squared();
        let (a, b) = self.denominators(d);
        Ok(e2 / a + e2 / b)
    }

    pub fn grad(&self, x_ij: &Vector) -> Result<Vector> {
        let d = x_ij.norm();
        if d <= 0.0 || d >= self.radius {
            return Err(Error::SingularDistance {
                i: 0,
                j: 0,
                dist: d,
                radius: self.radius,
            });
        }
        let e = x_ij - &self.x_star;
        let e2 = e.norm_squared();
        let (a, b) = self.denominators(d);
        // d(1/A)/dx = x/(d A^2) because dA/dd = -1; d(1/B)/dx = -x/(d B^2).
        Ok(&e * (2.0 * (1.0 / a + 1.0 / b)) + x_ij * (e2 / d * (1.0 / (a * a) - 1.0 / (b * b))))
    }
}

/// Unregularized pair bound used inside `Q_bar`:
/// `(R^2 - d^2)/d^2 + d^2/(R^2 - d^2)`.
pub fn v_bar(d: f64, radius: f64) -> f64 {
    let r2 = radius * radius;
    let d2 = d * d;
    (r2 - d2) / d2 + d2 / (r2 - d2)
}

/// Lower bound `Q_bar` that the potential ceiling `E` must exceed:
/// total initial kinetic energy plus `N(N-1)/2` times the worst initial
/// pair bound. Pairs at or beyond the sensing radius carry no potential and
/// are skipped; a coincident pair is an error.
pub fn compute_bar_q(states: &[AgentState], radius: f64) -> Result<f64> {
    let kinetic: f64 = states.iter().map(|s| 0.5 * s.velocity.norm_squared()).sum();
    let n = states.len();
    let mut worst: Option<f64> = None;
    for i in 0..n {
        for j in i + 1..n {
            let d = (&states[i].position - &states[j].position).norm();
            if d == 0.0 {
                return Err(Error::SingularDistance {
                    i,
                    j,
                    dist: d,
                    radius,
                });
            }
            if d < radius {
                let v = v_bar(d, radius);
                worst = Some(worst.map_or(v, |w: f64| w.max(v)));
            }
        }
    }
    let worst = worst.ok_or(Error::DistanceOutOfRange(radius, radius))?;
    Ok(kinetic + (n * (n - 1)) as f64 / 2.0 * worst)
}

/// Initial leader pair bound `V_hat'_ij(0)` used inside `H_bar`:
/// `|x_ij(0) - x*_ij|^2 (1/(R - |x_ij(0)|) + 1/|x_ij(0)|)`.
///
/// Defined only for initial distances strictly inside `(0, R)`.
pub fn hat_v_prime(x_ij0: &Vector, x_star: &Vector, radius: f64) -> Result<f64> {
    let d = x_ij0.norm();
    if d <= 0.0 || d >= radius {
        return Err(Error::SingularDistance {
            i: 0,
            j: 0,
            dist: d,
            radius,
        });
    }
    let e2 = (x_ij0 - x_star).norm_squared();
    Ok(e2 / (radius - d) + e2 / d)
}

/// Ceiling `H_bar` of the leader potential, evaluated once from the initial
/// conditions of the group `V_g = {i_f} + N(i_f)`.
///
/// `displacements` maps each leader `j` to `x*_{i_f j}`; the leader-pair
/// displacement follows as `x*_{ji} = x*_{i_f i} - x*_{i_f j}`.
#[allow(clippy::too_many_arguments)]
pub fn compute_bar_h(
    states: &[AgentState],
    graph: &ProximityGraph,
    malicious_id: usize,
    displacements: &BTreeMap<usize, Vector>,
    kappa_x: f64,
    gamma_k: &Matrix3<f64>,
    bounds: &Vector3<f64>,
    k_hat0: &Vector3<f64>,
) -> Result<f64> {
    let radius = graph.radius;
    let mut leaders: Vec<usize> = graph.neighbors(malicious_id).collect();
    leaders.sort_unstable();
    let v_f = &states[malicious_id].velocity;
    let x_f = &states[malicious_id].position;

    let mut total = 0.0;
    for &j in &leaders {
        let x_star_jf = -displacements
            .get(&j)
            .ok_or(Error::MissingDisplacement(j))?;
        let x_jf = &states[j].position - x_f;
        total += kappa_x * hat_v_prime(&x_jf, &x_star_jf, radius)?;
        for &i in &leaders {
            if i != j && graph.has_edge(i, j) {
                let x_star_ji = displacements[&i].clone() - &displacements[&j];
                let x_ji = &states[j].position - &states[i].position;
                total += kappa_x / 2.0 * hat_v_prime(&x_ji, &x_star_ji, radius)?;
            }
        }
        total += 0.5 * (&states[j].velocity - v_f).norm_squared();
    }

    let lambda_max_inv = lambda_max_of_inverse(gamma_k);
    let parameter_term: f64 = (0..3)
        .map(|i| {
            let b = bounds[i] + k_hat0[i];
            b * b
        })
        .sum();
    Ok(total + 0.5 * lambda_max_inv * parameter_term)
}

/// `lambda_max(G^-1) = 1 / lambda_min(G)` for symmetric positive-definite G.
pub fn lambda_max_of_inverse(gamma_k: &Matrix3<f64>) -> f64 {
    let eig = gamma_k.symmetric_eigen();
    1.0 / eig.eigenvalues.min()
}
