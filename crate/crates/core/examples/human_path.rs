//! Writes the co-carrying hand path (rest, 1.2 m backwards, 0.8 m sideways,
//! 0.2 m down and up) as a trajectory CSV.
//!
//! cargo run --example human_path -- data/scenarios/carry_path.csv

use cocarry::math::Pose;
use cocarry::world::CarryPath;

fn main() -> cocarry::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "carry_path.csv".into());
    let start = Pose::translation(0.7, 0.0, 0.85);
    let traj = CarryPath::trajectory(&start, 100.0)?;
    traj.write_csv(&out)?;
    let (t0, t1) = traj.span();
    println!("wrote {} samples spanning {t0}..{t1} s to {out}", traj.samples().len());
    for s in CarryPath::segments() {
        println!("  {:<10} {:>5.1} .. {:>5.1} s", s.label, s.t_s, s.t_e);
    }
    Ok(())
}
