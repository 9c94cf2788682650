//! Kinematics and dynamics of both bundled robots at their home posture:
//! tool pose, arm manipulability and the diagonal of the whole-body inertia.
//!
//! cargo run --example forward_kinematics

use cocarry::model::{RobotModel, BASE_DOF};
use cocarry::wbc_ik::manipulability;
use nalgebra::Vector3;

fn main() -> cocarry::Result<()> {
    for model in [RobotModel::moca(), RobotModel::kairos()] {
        let q = model.home(Vector3::new(0.5, -0.2, 0.3));
        let x = model.forward_kinematics(&q)?;
        let j = model.whole_body_jacobian(&q)?;
        let w = manipulability(&j.columns(BASE_DOF, model.arm_dof()).into_owned());
        let m = model.mass_matrix(&q)?;
        let p = x.translation.vector;
        let (roll, pitch, yaw) = x.rotation.euler_angles();
        println!("{} ({} dof)", model.name, model.dof());
        println!("  tool at ({:.3}, {:.3}, {:.3}) m, rpy ({roll:.3}, {pitch:.3}, {yaw:.3})", p.x, p.y, p.z);
        println!("  arm manipulability {w:.4}");
        let diag: Vec<String> = m.diagonal().iter().map(|v| format!("{v:.3}")).collect();
        println!("  inertia diagonal [{}]", diag.join(", "));
    }
    Ok(())
}
