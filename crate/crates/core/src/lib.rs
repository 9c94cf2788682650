pub mod aci;
pub mod cli;
pub mod error;
pub mod math;
pub mod metrics;
pub mod model;
pub mod sim;
pub mod wbc_ik;
pub mod wbc_impedance;
pub mod world;

pub use error::{Error, Result};
