//! Whole-body weighted closed-loop inverse kinematics for a velocity-controlled
//! mobile manipulator.
//!
//! Primary task: `min ‖ẋ_d + K(x_d − x) − J q̇‖²_{W₁} + ‖k q̇‖²_{W₂}` with the
//! damping factor `k` raised as the arm approaches a singularity. Secondary
//! task: the negative gradient of `‖q₀ − q‖²_{W₃}`, projected onto the null
//! space of the primary task.

use nalgebra::{DMatrix, DVector, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::math::{pose_error, Pose, Twist};
use crate::model::{RobotModel, WholeBodyState, BASE_DOF};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DampingSchedule {
    pub manipulability_threshold: f64,
    pub max_damping: f64,
}

impl Default for DampingSchedule {
    fn default() -> Self {
        Self {
            manipulability_threshold: 0.05,
            max_damping: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IkParams {
    pub gain: Vector6<f64>,
    pub task_weight: Vector6<f64>,
    pub velocity_weight: DVector<f64>,
    pub posture_weight: DVector<f64>,
    pub q_0: DVector<f64>,
    pub schedule: DampingSchedule,
    /// First-order time constant with which the robot tracks `q̇_d` (s).
    pub velocity_time_constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IkConfig {
    #[serde(default = "default_gain")]
    pub gain: [f64; 6],
    #[serde(default = "default_task_weight")]
    pub task_weight: [f64; 6],
    /// `(base, arm)` entries of the diagonal velocity weight.
    #[serde(default = "default_velocity_weight")]
    pub velocity_weight: [f64; 2],
    /// `(base, arm)` entries of the diagonal posture weight.
    #[serde(default = "default_posture_weight")]
    pub posture_weight: [f64; 2],
    #[serde(default)]
    pub schedule: DampingSchedule,
    #[serde(default = "default_velocity_time_constant")]
    pub velocity_time_constant: f64,
}

fn default_gain() -> [f64; 6] {
    [0.1, 0.1, 0.1, 0.01, 0.01, 0.01]
}
fn default_task_weight() -> [f64; 6] {
    [1000.0, 1000.0, 1000.0, 500.0, 500.0, 500.0]
}
fn default_velocity_weight() -> [f64; 2] {
    [10.0, 0.5]
}
fn default_posture_weight() -> [f64; 2] {
    [0.0, 1.0]
}
fn default_velocity_time_constant() -> f64 {
    0.02
}

impl Default for IkConfig {
    fn default() -> Self {
        Self {
            gain: default_gain(),
            task_weight: default_task_weight(),
            velocity_weight: default_velocity_weight(),
            posture_weight: default_posture_weight(),
            schedule: DampingSchedule::default(),
            velocity_time_constant: default_velocity_time_constant(),
        }
    }
}

impl IkConfig {
    pub fn validate(&self, locator: &str) -> Result<()> {
        if self.gain.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::config(format!("{locator}.gain"), "must be positive definite"));
        }
        if self.task_weight.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::config(format!("{locator}.task_weight"), "must be positive definite"));
        }
        if self.velocity_weight.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::config(format!("{locator}.velocity_weight"), "must be positive definite"));
        }
        if self.posture_weight.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::config(format!("{locator}.posture_weight"), "must be positive semidefinite"));
        }
        if !(self.schedule.max_damping > 0.0) || !(self.schedule.manipulability_threshold > 0.0) {
            return Err(Error::config(format!("{locator}.schedule"), "threshold and max damping must be > 0"));
        }
        if !(self.velocity_time_constant > 0.0) {
            return Err(Error::config(format!("{locator}.velocity_time_constant"), "must be > 0"));
        }
        Ok(())
    }

    pub fn to_params(&self, model: &RobotModel) -> IkParams {
        let n = model.dof();
        let split = |pair: [f64; 2]| {
            DVector::from_fn(n, |i, _| if i < BASE_DOF { pair[0] } else { pair[1] })
        };
        IkParams {
            gain: Vector6::from_column_slice(&self.gain),
            task_weight: Vector6::from_column_slice(&self.task_weight),
            velocity_weight: split(self.velocity_weight),
            posture_weight: split(self.posture_weight),
            q_0: model.home(nalgebra::Vector3::zeros()),
            schedule: self.schedule,
            velocity_time_constant: self.velocity_time_constant,
        }
    }
}

/// `sqrt(det(J Jᵀ))`, round-off negatives clamped to zero.
pub fn manipulability(j_arm: &DMatrix<f64>) -> f64 {
    let det = (j_arm * j_arm.transpose()).determinant();
    det.max(0.0).sqrt()
}

/// Quadratic ramp `k_max (1 − w/w₀)²` below the threshold, zero above.
pub fn damping_factor(w: f64, schedule: &DampingSchedule) -> f64 {
    let w0 = schedule.manipulability_threshold;
    if w >= w0 {
        0.0
    } else {
        let r = 1.0 - w.max(0.0) / w0;
        schedule.max_damping * r * r
    }
}

/// Weighted damped pseudo-inverse
/// `(JᵀW₁J + k²W₂)⁻¹JᵀW₁ = W₂⁻¹Jᵀ(J W₂⁻¹ Jᵀ + k² W₁⁻¹)⁻¹`.
///
/// The right-hand form only inverts a 6 x 6 matrix and stays defined for
/// `k = 0` whenever `J` has full row rank.
pub fn damped_pseudo_inverse(
    j: &DMatrix<f64>,
    task_weight: &Vector6<f64>,
    velocity_weight: &DVector<f64>,
    k: f64,
) -> Result<DMatrix<f64>> {
    let n = j.ncols();
    check_len("W2", n, velocity_weight.len())?;
    let w2_inv = DMatrix::from_diagonal(&velocity_weight.map(|v| 1.0 / v));
    let jw = j * &w2_inv;
    let mut inner = &jw * j.transpose();
    for i in 0..j.nrows() {
        inner[(i, i)] += k * k / task_weight[i];
    }
    let chol = inner.cholesky().ok_or(Error::SingularTask)?;
    // reject numerically singular factorizations at k = 0
    let diag_min = chol.l_dirty().diagonal().min();
    let diag_max = chol.l_dirty().diagonal().max();
    if k == 0.0 && diag_min <= 1e-10 * diag_max {
        return Err(Error::SingularTask);
    }
    Ok(jw.transpose() * chol.inverse())
}

/// Task-space command `ẋ_d + K (x_d − x)`.
pub fn task_error(x: &Pose, x_d: &Pose, xdot_d: &Twist, gain: &Vector6<f64>) -> Vector6<f64> {
    xdot_d + gain.component_mul(&pose_error(x_d, x))
}

/// Minimizer of the primary cost.
pub fn solve_primary(
    j: &DMatrix<f64>,
    x: &Pose,
    xdot_d: &Twist,
    x_d: &Pose,
    params: &IkParams,
    k: f64,
) -> Result<DVector<f64>> {
    check_len("J rows", 6, j.nrows())?;
    let e = task_error(x, x_d, xdot_d, &params.gain);
    let pinv = damped_pseudo_inverse(j, &params.task_weight, &params.velocity_weight, k)?;
    Ok(pinv * DVector::from_column_slice(e.as_slice()))
}

/// Raw posture velocity `W₃ (q₀ − q)`.
pub fn posture_velocity(q: &DVector<f64>, q_0: &DVector<f64>, posture_weight: &DVector<f64>) -> DVector<f64> {
    posture_weight.component_mul(&(q_0 - q))
}

/// `q̇_d = q̇₁ + (I − J⁺J) W₃(q₀ − q)` with the same damped pseudo-inverse.
pub fn solve_secondary(
    q: &DVector<f64>,
    dq_1: &DVector<f64>,
    j: &DMatrix<f64>,
    params: &IkParams,
    k: f64,
) -> Result<DVector<f64>> {
    let n = j.ncols();
    check_len("q", n, q.len())?;
    check_len("dq_1", n, dq_1.len())?;
    let dq_2 = posture_velocity(q, &params.q_0, &params.posture_weight);
    if dq_2.norm() == 0.0 {
        return Ok(dq_1.clone());
    }
    let pinv = damped_pseudo_inverse(j, &params.task_weight, &params.velocity_weight, k)?;
    let projected = &dq_2 - &pinv * (j * &dq_2);
    Ok(dq_1 + projected)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IkCommand {
    pub dq_d: DVector<f64>,
    pub manipulability: f64,
    pub damping: f64,
}

/// Manipulability, damping factor, primary and secondary solve. The base
/// posture reference follows the current base pose.
pub fn control_tick(
    model: &RobotModel,
    state: &WholeBodyState,
    x_d: &Pose,
    xdot_d: &Twist,
    params: &IkParams,
) -> Result<IkCommand> {
    let x = model.forward_kinematics(&state.q)?;
    let j = model.whole_body_jacobian(&state.q)?;
    let j_arm = j.columns(BASE_DOF, model.arm_dof()).into_owned();
    let w = manipulability(&j_arm);
    let k = damping_factor(w, &params.schedule);
    let dq_1 = solve_primary(&j, &x, xdot_d, x_d, params, k)?;

    let mut anchored = params.clone();
    anchored
        .q_0
        .rows_mut(0, BASE_DOF)
        .copy_from(&state.q.rows(0, BASE_DOF));
    let dq_d = solve_secondary(&state.q, &dq_1, &j, &anchored, k)?;
    Ok(IkCommand {
        dq_d,
        manipulability: w,
        damping: k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    #[test]
    fn manipulability_of_square_and_degenerate() {
        let j = DMatrix::from_fn(6, 6, |i, k| ((i * 7 + k * 3) % 5) as f64 + if i == k { 3.0 } else { 0.0 });
        assert!((manipulability(&j) - j.determinant().abs()).abs() < 1e-9 * j.determinant().abs());
        let mut z = DMatrix::from_fn(6, 7, |i, k| (i + k) as f64 * 0.1 + if i == k { 1.0 } else { 0.0 });
        z.row_mut(2).fill(0.0);
        assert_eq!(manipulability(&z), 0.0);
    }

    #[test]
    fn damping_schedule() {
        let s = DampingSchedule::default();
        assert_eq!(damping_factor(0.05, &s), 0.0);
        assert_eq!(damping_factor(1.0, &s), 0.0);
        assert_eq!(damping_factor(0.0, &s), 0.1);
        assert!((damping_factor(0.025, &s) - 0.025).abs() < 1e-15);
    }

    #[test]
    fn square_jacobian_exact_tracking() {
        let model = RobotModel::kairos();
        let q = model.home(Vector3::zeros());
        let j = model.arm_jacobian(&q).unwrap();
        let params = IkParams {
            velocity_weight: DVector::from_element(6, 0.5),
            posture_weight: DVector::zeros(6),
            q_0: DVector::zeros(6),
            ..IkConfig::default().to_params(&model)
        };
        let x = model.forward_kinematics(&q).unwrap();
        let xdot_d = Vector6::new(0.1, -0.05, 0.02, 0.0, 0.1, 0.0);
        let dq = solve_primary(&j, &x, &xdot_d, &x, &params, 0.0).unwrap();
        let exact = j.clone().lu().solve(&DVector::from_column_slice(xdot_d.as_slice())).unwrap();
        assert!((dq - exact).norm() < 1e-9);
    }

    #[test]
    fn at_rest_on_target_is_zero() {
        let model = RobotModel::kairos();
        let params = IkConfig::default().to_params(&model);
        let q = model.home(Vector3::new(0.3, 0.1, 0.0));
        let x = model.forward_kinematics(&q).unwrap();
        let j = model.whole_body_jacobian(&q).unwrap();
        let dq = solve_primary(&j, &x, &Vector6::zeros(), &x, &params, 0.05).unwrap();
        assert!(dq.norm() < 1e-12);
    }

    #[test]
    fn posture_at_home_leaves_primary_untouched() {
        let model = RobotModel::kairos();
        let params = IkConfig::default().to_params(&model);
        let q = params.q_0.clone();
        let j = model.whole_body_jacobian(&q).unwrap();
        let dq1 = DVector::from_element(model.dof(), 0.3);
        assert_eq!(solve_secondary(&q, &dq1, &j, &params, 0.0).unwrap(), dq1);
    }

    #[test]
    fn posture_weight_zeroes_base_rows() {
        let model = RobotModel::kairos();
        let params = IkConfig::default().to_params(&model);
        let q = DVector::from_element(model.dof(), 0.7);
        let dq2 = posture_velocity(&q, &params.q_0, &params.posture_weight);
        assert_eq!(&dq2.as_slice()[..3], &[0.0, 0.0, 0.0]);
        assert!(dq2.rows(3, 6).norm() > 0.0);
    }

    #[test]
    fn singular_normal_matrix_without_damping_is_an_error() {
        let mut j = DMatrix::from_fn(6, 9, |i, k| if i == k { 1.0 } else { 0.0 });
        j.row_mut(4).fill(0.0);
        let r = damped_pseudo_inverse(&j, &Vector6::from_element(1.0), &DVector::from_element(9, 1.0), 0.0);
        assert!(matches!(r, Err(Error::SingularTask)));
        let r = damped_pseudo_inverse(&j, &Vector6::from_element(1.0), &DVector::from_element(9, 1.0), 0.1);
        assert!(r.is_ok());
    }
}
