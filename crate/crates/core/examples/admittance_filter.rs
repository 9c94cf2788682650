//! Feeds the adaptive interface two synthetic interactions and prints how the
//! index settles. A hand that moves with no felt force (loose coupling) pushes
//! the index toward 1; a force that fully explains the hand motion (rigid
//! coupling) pushes it toward 0.
//!
//! cargo run --example admittance_filter

use cocarry::aci::{AciParams, AciState};
use cocarry::math::Pose;
use nalgebra::Vector3;

fn simulate(label: &str, params: &AciParams, force_for: impl Fn(&Vector3<f64>) -> Vector3<f64>) {
    let mut s = AciState::new(Pose::identity(), params);
    let steps = (3.0 / params.dt) as usize;
    for k in 0..=steps {
        let t = k as f64 * params.dt;
        let v_h = Vector3::new(0.2 * (1.5 * t).sin(), 0.0, 0.0);
        let out = s.tick(params, &force_for(&v_h), &v_h);
        if k % 500 == 0 {
            println!(
                "{label:>6} t {t:4.1} s  v_h {:+.3}  v_adm {:+.3}  alpha {:.3}  v_d {:+.3}",
                v_h.x, out.v_adm.x, out.alpha, out.v_d.x
            );
        }
    }
}

fn main() {
    let params = AciParams::default();
    let d = params.admittance.damping[0];
    simulate("loose", &params, |_| Vector3::zeros());
    // the force an admittance would need to reproduce the hand speed
    simulate("rigid", &params, |v_h| v_h * d);
}
