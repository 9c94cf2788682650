//! Whole-body Cartesian impedance controller for a torque-controlled mobile
//! manipulator.
//!
//! The joint torque is the closest command to a desired null-space torque
//! `τ₀` (in the `W`-weighted norm) that realizes the operational force `F`
//! through the dynamically consistent pseudo-inverse:
//!
//! ```text
//! min ½‖τ − τ₀‖²_W   s.t.   J̄ᵀ τ = F,   J̄ᵀ = Λ J M⁻¹,   Λ = (J M⁻¹ Jᵀ)⁻¹
//! ```
//!
//! whose closed form is
//! `τ = W⁻¹M⁻¹JᵀΛ_W Λ⁻¹ F + (I − W⁻¹M⁻¹JᵀΛ_W J M⁻¹) τ₀`
//! with `Λ_W = (J M⁻¹ W⁻¹ M⁻¹ Jᵀ)⁻¹`.

use nalgebra::{DMatrix, DVector, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::math::{pose_error, spd_inverse, Pose, Twist};
use crate::model::{RobotModel, WholeBodyState, BASE_DOF};

/// Relative singular-value threshold below which the task Jacobian is
/// considered rank deficient.
pub const SINGULARITY_RATIO: f64 = 1e-8;

/// Regularization used by the damped fallback.
pub const FALLBACK_DAMPING: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct ImpedanceParams {
    /// Diagonal Cartesian stiffness (N/m, N m/rad).
    pub stiffness: Vector6<f64>,
    /// Diagonal Cartesian damping.
    pub damping: Vector6<f64>,
    pub joint_stiffness: DVector<f64>,
    pub joint_damping: DVector<f64>,
    /// Diagonal of the weighting selector `H`.
    pub h: DVector<f64>,
    /// Default whole-body configuration. Base entries are ignored by
    /// [`control_tick`], which anchors the base posture at its current pose.
    pub q_0: DVector<f64>,
    /// Adds `D_b` times the planar part of the desired twist to the base rows.
    pub base_velocity_feedforward: bool,
    pub torque_limits: Option<DVector<f64>>,
}

/// `2ξ√k` element-wise.
pub fn damping_from_ratio(stiffness: &[f64], ratio: f64) -> Vec<f64> {
    stiffness.iter().map(|k| 2.0 * ratio * k.sqrt()).collect()
}

/// Serializable controller settings. Missing fields take the experiment
/// defaults of the torque-controlled platform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImpedanceConfig {
    #[serde(default = "default_cartesian_stiffness")]
    pub cartesian_stiffness: [f64; 6],
    #[serde(default = "default_ratio")]
    pub cartesian_damping_ratio: f64,
    #[serde(default = "default_joint_stiffness")]
    pub joint_stiffness: f64,
    #[serde(default = "default_ratio")]
    pub joint_damping_ratio: f64,
    /// Diagonal of `H`; all ones when omitted.
    #[serde(default)]
    pub h: Option<Vec<f64>>,
    #[serde(default = "default_true")]
    pub base_velocity_feedforward: bool,
    #[serde(default)]
    pub torque_limits: Option<Vec<f64>>,
}

fn default_cartesian_stiffness() -> [f64; 6] {
    [200.0, 200.0, 200.0, 30.0, 30.0, 30.0]
}
fn default_ratio() -> f64 {
    0.7
}
fn default_joint_stiffness() -> f64 {
    50.0
}
fn default_true() -> bool {
    true
}

impl Default for ImpedanceConfig {
    fn default() -> Self {
        Self {
            cartesian_stiffness: default_cartesian_stiffness(),
            cartesian_damping_ratio: default_ratio(),
            joint_stiffness: default_joint_stiffness(),
            joint_damping_ratio: default_ratio(),
            h: None,
            base_velocity_feedforward: true,
            torque_limits: None,
        }
    }
}

impl ImpedanceConfig {
    pub fn validate(&self, n: usize, locator: &str) -> Result<()> {
        if self.cartesian_stiffness.iter().any(|k| !(*k >= 0.0)) {
            return Err(Error::config(format!("{locator}.cartesian_stiffness"), "must be >= 0"));
        }
        if !(self.joint_stiffness >= 0.0) {
            return Err(Error::config(format!("{locator}.joint_stiffness"), "must be >= 0"));
        }
        for (name, r) in [
            ("cartesian_damping_ratio", self.cartesian_damping_ratio),
            ("joint_damping_ratio", self.joint_damping_ratio),
        ] {
            if !(r > 0.0 && r <= 1.0) {
                return Err(Error::config(format!("{locator}.{name}"), "must lie in (0, 1]"));
            }
        }
        if let Some(h) = &self.h {
            if h.len() != n {
                return Err(Error::config(format!("{locator}.h"), format!("expected {n} entries")));
            }
            if h.iter().any(|v| *v == 0.0 || !v.is_finite()) {
                return Err(Error::config(format!("{locator}.h"), "degenerate weighting: zero entry"));
            }
        }
        if let Some(l) = &self.torque_limits {
            if l.len() != n || l.iter().any(|v| !(*v > 0.0)) {
                return Err(Error::config(
                    format!("{locator}.torque_limits"),
                    format!("expected {n} positive entries"),
                ));
            }
        }
        Ok(())
    }

    pub fn to_params(&self, model: &RobotModel) -> ImpedanceParams {
        let n = model.dof();
        let k = self.cartesian_stiffness;
        ImpedanceParams {
            stiffness: Vector6::from_column_slice(&k),
            damping: Vector6::from_column_slice(&damping_from_ratio(&k, self.cartesian_damping_ratio)),
            joint_stiffness: DVector::from_element(n, self.joint_stiffness),
            joint_damping: DVector::from_vec(damping_from_ratio(
                &vec![self.joint_stiffness; n],
                self.joint_damping_ratio,
            )),
            h: self
                .h
                .clone()
                .map(DVector::from_vec)
                .unwrap_or_else(|| DVector::from_element(n, 1.0)),
            q_0: model.home(nalgebra::Vector3::zeros()),
            base_velocity_feedforward: self.base_velocity_feedforward,
            torque_limits: self.torque_limits.clone().map(DVector::from_vec),
        }
    }
}

/// `F = D_d (ẋ_d − ẋ) + K_d (x_d − x)` with the orientation error taken as
/// the world-frame rotation vector of `q_d q⁻¹`.
pub fn impedance_wrench(
    x: &Pose,
    xdot: &Twist,
    x_d: &Pose,
    xdot_d: &Twist,
    params: &ImpedanceParams,
) -> Vector6<f64> {
    let x = normalized(x);
    let x_d = normalized(x_d);
    let err = pose_error(&x_d, &x);
    params.damping.component_mul(&(xdot_d - xdot)) + params.stiffness.component_mul(&err)
}

fn normalized(p: &Pose) -> Pose {
    let mut p = *p;
    p.rotation = crate::math::renormalized(&p.rotation);
    p
}

/// `τ₀ = −D₀ q̇ − K₀ (q − q₀)`.
pub fn nullspace_torque(
    q: &DVector<f64>,
    dq: &DVector<f64>,
    q_0: &DVector<f64>,
    params: &ImpedanceParams,
) -> Result<DVector<f64>> {
    let n = params.joint_stiffness.len();
    check_len("q", n, q.len())?;
    check_len("dq", n, dq.len())?;
    check_len("q_0", n, q_0.len())?;
    Ok(-params.joint_damping.component_mul(dq) - params.joint_stiffness.component_mul(&(q - q_0)))
}

/// `W = Hᵀ M⁻¹ H` for diagonal `H`.
pub fn weighting_matrix(m: &DMatrix<f64>, h: &DVector<f64>) -> Result<DMatrix<f64>> {
    check_len("H", m.nrows(), h.len())?;
    if h.iter().any(|v| *v == 0.0) {
        return Err(Error::DegenerateWeighting);
    }
    let m_inv = spd_inverse(m, "inertia")?;
    let hm = DMatrix::from_diagonal(h);
    Ok(&hm * m_inv * &hm)
}

/// Closed-form prioritized weighted inverse dynamics. Fails with
/// [`Error::TaskSingularity`] when `J` loses rank.
pub fn solve_torques(
    m: &DMatrix<f64>,
    j: &DMatrix<f64>,
    force: &Vector6<f64>,
    tau_0: &DVector<f64>,
    w: &DMatrix<f64>,
) -> Result<DVector<f64>> {
    check_rank(j)?;
    solve_with_regularization(m, j, force, tau_0, w, 0.0)
}

/// Same as [`solve_torques`] with `μ I` added before inverting the weighted
/// Cartesian inertia. Usable at singular configurations.
pub fn solve_torques_damped(
    m: &DMatrix<f64>,
    j: &DMatrix<f64>,
    force: &Vector6<f64>,
    tau_0: &DVector<f64>,
    w: &DMatrix<f64>,
    mu: f64,
) -> Result<DVector<f64>> {
    solve_with_regularization(m, j, force, tau_0, w, mu)
}

fn check_rank(j: &DMatrix<f64>) -> Result<()> {
    let sv = j.clone().svd(false, false).singular_values;
    let largest = sv.max();
    let smallest = if j.nrows() <= j.ncols() { sv.min() } else { 0.0 };
    if smallest < SINGULARITY_RATIO * largest || largest == 0.0 {
        return Err(Error::TaskSingularity { smallest, largest });
    }
    Ok(())
}

fn solve_with_regularization(
    m: &DMatrix<f64>,
    j: &DMatrix<f64>,
    force: &Vector6<f64>,
    tau_0: &DVector<f64>,
    w: &DMatrix<f64>,
    mu: f64,
) -> Result<DVector<f64>> {
    let n = m.nrows();
    check_len("J columns", n, j.ncols())?;
    check_len("J rows", 6, j.nrows())?;
    check_len("tau_0", n, tau_0.len())?;
    check_len("W", n, w.nrows())?;
    let m_inv = spd_inverse(m, "inertia")?;
    let w_inv = spd_inverse(w, "weighting")?;

    // A = M⁻¹ Jᵀ (n x 6)
    let a = &m_inv * j.transpose();
    let lambda_inv = j * &a;
    let mut weighted = a.transpose() * &w_inv * &a;
    if mu > 0.0 {
        weighted += DMatrix::identity(6, 6) * mu;
    }
    let lambda_w = spd_inverse(&weighted, "weighted Cartesian inertia")?;
    let f = DVector::from_column_slice(force.as_slice());
    let rhs = &lambda_inv * f - a.transpose() * tau_0;
    Ok(&w_inv * &a * (lambda_w * rhs) + tau_0)
}

/// Operational force `J̄ᵀ τ` realized by a joint torque.
pub fn realized_force(m: &DMatrix<f64>, j: &DMatrix<f64>, tau: &DVector<f64>) -> Result<DVector<f64>> {
    let m_inv = spd_inverse(m, "inertia")?;
    let a = &m_inv * j.transpose();
    let lambda = spd_inverse(&(j * &a), "Cartesian inertia")?;
    Ok(lambda * a.transpose() * tau)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImpedanceCommand {
    pub tau: DVector<f64>,
    pub wrench: Vector6<f64>,
    /// The damped fallback was needed this tick.
    pub singular: bool,
}

/// Full controller tick: wrench, null-space torque, weighting, torque solve,
/// arm gravity compensation and the optional base velocity feed-forward.
pub fn control_tick(
    model: &RobotModel,
    state: &WholeBodyState,
    x_d: &Pose,
    xdot_d: &Twist,
    params: &ImpedanceParams,
) -> Result<ImpedanceCommand> {
    let n = model.dof();
    check_len("state q", n, state.q.len())?;
    let x = model.forward_kinematics(&state.q)?;
    let j = model.whole_body_jacobian(&state.q)?;
    let xdot: Twist = Vector6::from_column_slice((&j * &state.dq).as_slice());
    let wrench = impedance_wrench(&x, &xdot, x_d, xdot_d, params);

    let mut q_0 = params.q_0.clone();
    q_0.rows_mut(0, BASE_DOF).copy_from(&state.q.rows(0, BASE_DOF));
    let tau_0 = nullspace_torque(&state.q, &state.dq, &q_0, params)?;

    let m = model.mass_matrix(&state.q)?;
    let w = weighting_matrix(&m, &params.h)?;
    let (mut tau, singular) = match solve_torques(&m, &j, &wrench, &tau_0, &w) {
        Ok(t) => (t, false),
        Err(Error::TaskSingularity { smallest, largest }) => {
            log::warn!(
                "task singularity (σ_min {smallest:.3e}, σ_max {largest:.3e}); using damped inversion"
            );
            (solve_torques_damped(&m, &j, &wrench, &tau_0, &w, FALLBACK_DAMPING)?, true)
        }
        Err(e) => return Err(e),
    };

    let (_, g) = model.bias_terms(&state.q, &DVector::zeros(n))?;
    tau += g;
    if params.base_velocity_feedforward {
        let d_b = model.base.virtual_damping;
        tau[0] += d_b[0] * xdot_d[0];
        tau[1] += d_b[1] * xdot_d[1];
    }
    if let Some(limits) = &params.torque_limits {
        for i in 0..n {
            tau[i] = tau[i].clamp(-limits[i], limits[i]);
        }
    }
    Ok(ImpedanceCommand {
        tau,
        wrench,
        singular,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Isometry3, UnitQuaternion, Vector3};

    fn default_params(model: &RobotModel) -> ImpedanceParams {
        ImpedanceConfig::default().to_params(model)
    }

    #[test]
    fn wrench_vanishes_on_target() {
        let p = default_params(&RobotModel::moca());
        let x = Isometry3::translation(0.1, 0.2, 0.3);
        let v = Vector6::new(0.1, 0.0, 0.0, 0.0, 0.2, 0.0);
        assert_eq!(impedance_wrench(&x, &v, &x, &v, &p), Vector6::zeros());
    }

    #[test]
    fn translational_offset_gives_stiffness_times_offset() {
        let p = default_params(&RobotModel::moca());
        let x = Isometry3::identity();
        let x_d = Isometry3::translation(0.01, 0.0, 0.0);
        let f = impedance_wrench(&x, &Vector6::zeros(), &x_d, &Vector6::zeros(), &p);
        assert!((f - Vector6::new(2.0, 0.0, 0.0, 0.0, 0.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn small_rotation_gives_proportional_torque() {
        let p = default_params(&RobotModel::moca());
        for delta in [0.001, 0.01, 0.03, 0.05] {
            let x_d = Isometry3::from_parts(
                Default::default(),
                UnitQuaternion::from_axis_angle(&Vector3::z_axis(), delta),
            );
            let f = impedance_wrench(&Isometry3::identity(), &Vector6::zeros(), &x_d, &Vector6::zeros(), &p);
            assert!((f[5] - 30.0 * delta).abs() < 0.01 * 30.0 * delta);
        }
    }

    #[test]
    fn drifted_quaternion_is_normalized() {
        let p = default_params(&RobotModel::moca());
        let q = nalgebra::Quaternion::new(1.001, 0.0, 0.0, 0.0);
        let x = Isometry3::from_parts(Default::default(), UnitQuaternion::new_unchecked(q));
        let f = impedance_wrench(&x, &Vector6::zeros(), &Isometry3::identity(), &Vector6::zeros(), &p);
        assert!(f.norm() < 1e-9 && f.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn nullspace_torque_cases() {
        let model = RobotModel::moca();
        let p = default_params(&model);
        let n = model.dof();
        let q0 = p.q_0.clone();
        let t = nullspace_torque(&q0, &DVector::zeros(n), &q0, &p).unwrap();
        assert_eq!(t.norm(), 0.0);

        let mut q = q0.clone();
        q[5] += 0.1;
        let t = nullspace_torque(&q, &DVector::zeros(n), &q0, &p).unwrap();
        assert!((t[5] + 5.0).abs() < 1e-12);
        assert!(t.iter().enumerate().all(|(i, v)| i == 5 || *v == 0.0));

        let mut dq = DVector::zeros(n);
        dq[4] = 1.0;
        let t = nullspace_torque(&q0, &dq, &q0, &p).unwrap();
        let expected = -2.0 * 0.7 * 50f64.sqrt();
        assert!((t[4] - expected).abs() < 1e-12);
        assert!((t[4] + 9.899_494_936_611_665).abs() < 1e-12);
    }

    #[test]
    fn weighting_with_identity_and_scaled_h() {
        let model = RobotModel::moca();
        let q = model.home(Vector3::zeros());
        let m = model.mass_matrix(&q).unwrap();
        let m_inv = spd_inverse(&m, "m").unwrap();
        let n = model.dof();
        let w = weighting_matrix(&m, &DVector::from_element(n, 1.0)).unwrap();
        assert!((&w - &m_inv).norm() < 1e-12);
        let w2 = weighting_matrix(&m, &DVector::from_element(n, 2.0)).unwrap();
        assert!((&w2 - &m_inv * 4.0).norm() < 1e-10);
    }

    #[test]
    fn singular_h_is_degenerate() {
        let model = RobotModel::moca();
        let q = model.home(Vector3::zeros());
        let m = model.mass_matrix(&q).unwrap();
        let mut h = DVector::from_element(model.dof(), 1.0);
        h[3] = 0.0;
        assert!(matches!(weighting_matrix(&m, &h), Err(Error::DegenerateWeighting)));
    }

    #[test]
    fn zero_force_and_zero_posture_torque_give_zero() {
        let model = RobotModel::moca();
        let q = model.home(Vector3::zeros());
        let m = model.mass_matrix(&q).unwrap();
        let j = model.whole_body_jacobian(&q).unwrap();
        let w = weighting_matrix(&m, &DVector::from_element(model.dof(), 1.0)).unwrap();
        let tau = solve_torques(&m, &j, &Vector6::zeros(), &DVector::zeros(model.dof()), &w).unwrap();
        assert!(tau.norm() < 1e-12);
    }

    #[test]
    fn rank_deficient_jacobian_is_a_task_singularity() {
        let model = RobotModel::moca();
        let q = model.home(Vector3::zeros());
        let m = model.mass_matrix(&q).unwrap();
        let mut j = model.whole_body_jacobian(&q).unwrap();
        j.row_mut(5).fill(0.0);
        let w = weighting_matrix(&m, &DVector::from_element(model.dof(), 1.0)).unwrap();
        let f = Vector6::new(1.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        let tau0 = DVector::zeros(model.dof());
        assert!(matches!(
            solve_torques(&m, &j, &f, &tau0, &w),
            Err(Error::TaskSingularity { .. })
        ));
        let tau = solve_torques_damped(&m, &j, &f, &tau0, &w, FALLBACK_DAMPING).unwrap();
        assert!(tau.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn resting_on_target_holds_gravity() {
        let model = RobotModel::moca();
        let p = default_params(&model);
        let q = model.home(Vector3::new(0.5, 0.0, 0.0));
        let state = WholeBodyState::at_rest(q.clone());
        let x = model.forward_kinematics(&q).unwrap();
        let cmd = control_tick(&model, &state, &x, &Vector6::zeros(), &p).unwrap();
        let (_, g) = model.bias_terms(&q, &DVector::zeros(model.dof())).unwrap();
        assert!((&cmd.tau - &g).norm() < 1e-9);
    }

    #[test]
    fn static_offset_realizes_stiffness_force() {
        let model = RobotModel::moca();
        let p = default_params(&model);
        let q = model.home(Vector3::zeros());
        let state = WholeBodyState::at_rest(q.clone());
        let x = model.forward_kinematics(&q).unwrap();
        let offset = Vector3::new(0.02, -0.01, 0.015);
        let x_d = Isometry3::from_parts((x.translation.vector + offset).into(), x.rotation);
        let cmd = control_tick(&model, &state, &x_d, &Vector6::zeros(), &p).unwrap();
        let (_, g) = model.bias_terms(&q, &DVector::zeros(model.dof())).unwrap();
        let m = model.mass_matrix(&q).unwrap();
        let j = model.whole_body_jacobian(&q).unwrap();
        let f = realized_force(&m, &j, &(cmd.tau - g)).unwrap();
        let expected = offset * 200.0;
        assert!((f.rows(0, 3) - expected).norm() < 1e-8);
        assert!(f.rows(3, 3).norm() < 1e-8);
    }
}
