//! Parameter estimation for the malicious gains: matched first-order
//! low-pass filters on the malicious velocity and regressor, the algebraic
//! identity `v - v^F = -C^F k` they produce, and the adaptive update law of
//! the estimate `k_hat`.

use nalgebra::{DMatrix, Matrix3, Vector3};

use crate::controllers::Regressor;
use crate::swarm::Vector;

/// Gains of the filters and the estimate update. The defaults are artifact
/// choices: filter gain 10, `Gamma_k = 10 I`, and a "presumed normal" prior
/// `k_hat(0) = (1, 1, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorGains {
    /// Filter pole `a > 0` shared by both filters.
    pub filter_gain: f64,
    /// Symmetric positive-definite update gain.
    pub gamma_k: Matrix3<f64>,
    /// Initial estimate.
    pub k_hat0: Vector3<f64>,
}

impl Default for EstimatorGains {
    fn default() -> Self {
        Self {
            filter_gain: 10.0,
            gamma_k: Matrix3::identity() * 10.0,
            k_hat0: Vector3::new(1.0, 1.0, 1.0),
        }
    }
}

impl EstimatorGains {
    pub fn is_valid(&self) -> bool {
        let sym = (self.gamma_k - self.gamma_k.transpose()).norm() < 1e-12;
        let pd = self.gamma_k.symmetric_eigen().eigenvalues.min() > 0.0;
        self.filter_gain > 0.0 && sym && pd
    }
}

/// Filtered quantities and the running estimate. Initial conditions:
/// `v^F(0) = v_{i_f}(0)`, `C^F(0) = 0`, `k_hat(0)` from the gains.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorState {
    /// Filtered malicious velocity `v^F_{i_f}`.
    pub v_filtered: Vector,
    /// Filtered regressor `C^F_{i_f}` (`m x 3`).
    pub c_filtered: DMatrix<f64>,
    /// Current estimate of `(k_v, k_a, k_r)`.
    pub k_hat: Vector3<f64>,
}

impl EstimatorState {
    pub fn initial(v_malicious0: &Vector, gains: &EstimatorGains) -> Self {
        Self {
            v_filtered: v_malicious0.clone(),
            c_filtered: DMatrix::zeros(v_malicious0.len(), 3),
            k_hat: gains.k_hat0,
        }
    }
}

/// Time derivatives of the two filters:
/// `dv^F/dt = -a v^F + a v_{i_f}` and `dC^F/dt = -a C^F + C`.
pub fn filter_derivatives(
    state: &EstimatorState,
    filter_gain: f64,
    v_malicious: &Vector,
    regressor: &Regressor,
) -> (Vector, DMatrix<f64>) {
    let dv = (v_malicious - &state.v_filtered) * filter_gain;
    let dc = &regressor.matrix - &state.c_filtered * filter_gain;
    (dv, dc)
}

/// Update law of the estimate:
/// `dk_hat/dt = Gamma C^T sum_j (v_j - v_{i_f})
///              - Gamma (C^F)^T (C^F k_hat + v_{i_f} - v^F)`.
///
/// The consensus term enters with a plus: it must cancel the
/// `(v_j - v_{i_f})^T C (k - k_hat)` cross term in dH/dt, which also makes
/// its first component `-gamma |sum_j (v_j - v_{i_f})|^2`, a damping on
/// `k_hat_v` (the opposite sign turns it into an always-positive injection
/// and destabilizes the group).
pub fn estimate_derivative(
    state: &EstimatorState,
    gamma_k: &Matrix3<f64>,
    regressor: &Regressor,
    velocity_sum: &Vector,
    v_malicious: &Vector,
) -> Vector3<f64> {
    let consensus = regressor.matrix.transpose() * velocity_sum;
    let residual = &state.c_filtered * Vector::from_column_slice(state.k_hat.as_slice())
        + v_malicious
        - &state.v_filtered;
    let correction = state.c_filtered.transpose() * residual;
    let rhs = Vector3::new(
        consensus[0] - correction[0],
        consensus[1] - correction[1],
        consensus[2] - correction[2],
    );
    gamma_k * rhs
}

/// Magnitude of the filter-identity defect under the current estimate:
/// `|C^F k_hat + v_{i_f} - v^F|`, which equals `|C^F (k_hat - k)|` when the
/// filter identity holds exactly.
pub fn prediction_residual(state: &EstimatorState, v_malicious: &Vector) -> f64 {
    (&state.c_filtered * Vector::from_column_slice(state.k_hat.as_slice()) + v_malicious
        - &state.v_filtered)
        .norm()
}
