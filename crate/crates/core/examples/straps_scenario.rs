//! Runs the strap-coupled box scenario with the adaptive interface and the
//! admittance baseline and prints the per-segment summary.
//!
//! cargo run --release --example straps_scenario [-- <scenario file>]

use std::path::PathBuf;

use cocarry::metrics::report;
use cocarry::sim::{baseline_mode, run, ScenarioConfig};

fn main() -> cocarry::Result<()> {
    env_logger::init();
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/scenarios/straps.scenario"));
    let config = ScenarioConfig::from_file(&path)?;
    let aci = run(&config)?;
    let baseline = run(&baseline_mode(&config))?;
    for log in [&aci, &baseline] {
        println!("{}: {:?}, real-time factor {:.1}", log.meta.name, log.status, log.real_time_factor().unwrap_or(0.0));
    }
    let r = report(&[aci, baseline], &config.segments)?;
    print!("{}", r.summary);
    Ok(())
}
