//! Velocity-controlled whole-body IK on the 6-DoF mobile manipulator: the
//! tool follows a target moving at 0.1 m/s for two seconds, then stops.
//! Prints how the motion splits between base and arm.
//!
//! cargo run --release --example ik_controller

use cocarry::model::{RobotModel, WholeBodyState, BASE_DOF};
use cocarry::wbc_ik::{control_tick, IkConfig};
use nalgebra::{Vector3, Vector6};

fn main() -> cocarry::Result<()> {
    let model = RobotModel::kairos();
    let params = IkConfig::default().to_params(&model);
    let mut state = WholeBodyState::at_rest(model.home(Vector3::zeros()));
    let mut x_d = model.forward_kinematics(&state.q)?;
    let h = 1e-3;
    let lag = 1.0 - (-h / params.velocity_time_constant).exp();

    for k in 0..=4000 {
        let t = k as f64 * h;
        let speed = if t < 2.0 { 0.1 } else { 0.0 };
        let mut xdot_d = Vector6::zeros();
        xdot_d[0] = speed;
        let cmd = control_tick(&model, &state, &x_d, &xdot_d, &params)?;
        if k % 500 == 0 {
            let x = model.forward_kinematics(&state.q)?.translation.vector;
            let err = (x_d.translation.vector - x).norm();
            let arm = state.dq.rows(BASE_DOF, model.arm_dof()).norm();
            println!(
                "t {t:3.1} s  tool x {:+.4} m  error {:.2e} m  base vx {:+.4}  |arm dq| {arm:.4}  damping {:.3}",
                x.x, err, state.dq[0], cmd.damping
            );
        }
        // first-order lag stands in for the low-level velocity loop
        state.dq += (&cmd.dq_d - &state.dq) * lag;
        let dq = state.dq.clone();
        state.q += dq * h;
        x_d.translation.vector.x += speed * h;
    }
    Ok(())
}
