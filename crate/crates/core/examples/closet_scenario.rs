//! Rigidly grasped closet: runs the adaptive interface and the admittance
//! baseline, writes both logs plus the report tables and prints the checks
//! used by `cocarry reproduce closet`.
//!
//! cargo run --release --example closet_scenario [-- <output dir>]

use std::path::PathBuf;

use cocarry::cli::{bundled_scenario, closet_checks};
use cocarry::metrics::report;
use cocarry::sim::{baseline_mode, batch, ScenarioConfig};

fn main() -> cocarry::Result<()> {
    env_logger::init();
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "closet-out".into()));
    let config = ScenarioConfig::from_file(bundled_scenario("closet"))?;
    let configs = [config.clone(), baseline_mode(&config)];
    let logs = batch(&configs, 2).into_iter().collect::<cocarry::Result<Vec<_>>>()?;
    for (log, c) in logs.iter().zip(&configs) {
        let (csv, _) = log.write(&out, Some(c))?;
        println!("{} -> {}", log.meta.name, csv.display());
    }
    let r = report(&logs, &config.segments)?;
    r.write(&out)?;
    print!("{}", r.summary);
    for check in closet_checks(&logs[0], &logs[1], &config.segments)? {
        println!("{check}");
    }
    Ok(())
}
