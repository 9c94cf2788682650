//! Force a strap and a rigid grasp exert on their agent as the agent moves
//! down toward the object and back up. The strap goes slack once the agent
//! is within its rest length; the rigid grasp pushes as well as pulls.
//!
//! cargo run --example strap_coupling

use cocarry::world::{link_force, Agent, CouplingLink, EndPoint};
use nalgebra::Vector3;

fn main() {
    let strap = CouplingLink::strap(Agent::Robot(0), 0, 0.3);
    let rigid = CouplingLink::rigid(Agent::Robot(1), 1).with_gains(2e4, 200.0);
    let object = EndPoint {
        position: Vector3::zeros(),
        velocity: Vector3::zeros(),
    };
    println!("strap k {:.0} N/m, rest length {} m", strap.stiffness, strap.rest_length);
    for height in [0.36, 0.33, 0.31, 0.30, 0.25, 0.20] {
        let agent = EndPoint {
            position: Vector3::new(0.0, 0.0, height),
            velocity: Vector3::zeros(),
        };
        let fs = link_force(&strap, &agent, &object);
        let rigid_agent = EndPoint {
            position: Vector3::new(0.0, 0.0, height - 0.3),
            velocity: Vector3::zeros(),
        };
        let fr = link_force(&rigid, &rigid_agent, &object);
        println!("agent z {height:.2} m  strap Fz {:+9.2} N  rigid Fz {:+9.2} N", fs.z, fr.z);
    }
}
