//! Torque-controlled whole-body impedance on the 7-DoF mobile manipulator:
//! commands a 5 cm sideways step of the tool and prints the response.
//!
//! cargo run --release --example impedance_controller

use cocarry::model::{RobotModel, WholeBodyState};
use cocarry::wbc_impedance::{control_tick, ImpedanceConfig};
use nalgebra::{Vector3, Vector6};

fn main() -> cocarry::Result<()> {
    let model = RobotModel::moca();
    let mut params = ImpedanceConfig::default().to_params(&model);
    let mut state = WholeBodyState::at_rest(model.home(Vector3::zeros()));
    params.q_0 = state.q.clone();
    let start = model.forward_kinematics(&state.q)?.translation.vector;
    let mut x_d = model.forward_kinematics(&state.q)?;
    x_d.translation.vector.y += 0.05;

    let h = 2.5e-4;
    for k in 0..=(3.0 / h) as usize {
        let cmd = control_tick(&model, &state, &x_d, &Vector6::zeros(), &params)?;
        if k % 1000 == 0 {
            let p = model.forward_kinematics(&state.q)?.translation.vector - start;
            println!(
                "t {:4.2} s  tool offset ({:+.4}, {:+.4}, {:+.4}) m  base y {:+.4} m  |tau| {:.2}",
                k as f64 * h,
                p.x,
                p.y,
                p.z,
                state.q[1],
                cmd.tau.norm()
            );
        }
        let ddq = model.forward_dynamics(&state.q, &state.dq, &cmd.tau)?;
        state.dq += ddq * h;
        let dq = state.dq.clone();
        state.q += dq * h;
    }
    Ok(())
}
