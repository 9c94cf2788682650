//! Sweeps the strap stiffness of the strap scenario and prints the mean
//! interaction index of each robot during motion. Runs in parallel; the
//! results do not depend on the number of jobs.
//!
//! cargo run --release --example stiffness_sweep [-- <jobs>]

use cocarry::cli::bundled_scenario;
use cocarry::metrics::motion_alpha_stats;
use cocarry::sim::{batch, with_strap_stiffness, ScenarioConfig};

fn main() -> cocarry::Result<()> {
    let jobs = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(4);
    let config = ScenarioConfig::from_file(bundled_scenario("straps"))?;
    let ks = [1e2, 1e3, 1e4, 1e6];
    let configs: Vec<_> = ks.iter().map(|&k| with_strap_stiffness(&config, k)).collect();
    for (c, log) in configs.iter().zip(batch(&configs, jobs)) {
        let log = log?;
        let alphas = (0..c.robots.len())
            .map(|r| motion_alpha_stats(&log, r, &c.segments).map(|s| format!("{} {:.3}", c.robots[r].name, s.mean)))
            .collect::<cocarry::Result<Vec<_>>>()?;
        println!("{:<24} substeps {:>3}  alpha {}", c.name, c.physics_substeps, alphas.join(", "));
    }
    Ok(())
}
