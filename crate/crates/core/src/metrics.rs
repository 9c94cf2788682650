//! Post-run analysis: human–robot alignment per sub-movement, adaptive index
//! and force statistics, and the report tables.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::RunLog;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

/// One labeled sub-movement of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentSpec {
    pub label: String,
    pub t_s: f64,
    pub t_e: f64,
    /// Main direction of the sub-movement.
    pub axis: Axis,
}

impl SegmentSpec {
    pub fn new(label: &str, t_s: f64, t_e: f64, axis: Axis) -> Self {
        Self {
            label: label.to_string(),
            t_s,
            t_e,
            axis,
        }
    }

    pub fn window(&self) -> Window {
        Window {
            t_s: self.t_s,
            t_e: self.t_e,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub t_s: f64,
    pub t_e: f64,
}

impl Window {
    pub fn whole(log: &RunLog) -> Self {
        Self {
            t_s: f64::NEG_INFINITY,
            t_e: f64::INFINITY,
        }
        .clip(log)
    }

    fn clip(self, log: &RunLog) -> Self {
        let (a, b) = match (log.ticks.first(), log.ticks.last()) {
            (Some(a), Some(b)) => (a.t, b.t),
            _ => return self,
        };
        Self {
            t_s: self.t_s.max(a),
            t_e: self.t_e.min(b),
        }
    }

    fn contains(&self, t: f64) -> bool {
        t >= self.t_s - 1e-9 && t <= self.t_e + 1e-9
    }
}

/// Alignment of one robot over one segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Alignment {
    /// Time average of `|R(t)|` per component (m).
    pub per_axis: Vector3<f64>,
    /// Time average of `‖R(t)‖` (m).
    pub norm: f64,
}

impl Alignment {
    pub fn along(&self, axis: Axis) -> f64 {
        self.per_axis[axis.index()]
    }
}

/// Alignment from sampled series. `R(t) = (r_ee − r_h)(t) − (r_ee − r_h)(t_s)`
/// with the start taken at the first sample; trapezoidal quadrature.
pub fn alignment_from_series(t: &[f64], ee: &[Vector3<f64>], hand: &[Vector3<f64>]) -> Result<Alignment> {
    if t.len() < 2 || ee.len() != t.len() || hand.len() != t.len() {
        return Err(Error::EmptyWindow("alignment needs at least two samples".into()));
    }
    let start = ee[0] - hand[0];
    let r: Vec<Vector3<f64>> = ee.iter().zip(hand).map(|(e, h)| e - h - start).collect();
    let mut per_axis = Vector3::zeros();
    let mut norm = 0.0;
    for k in 1..t.len() {
        let h = t[k] - t[k - 1];
        per_axis += (r[k].abs() + r[k - 1].abs()) * (0.5 * h);
        norm += 0.5 * h * (r[k].norm() + r[k - 1].norm());
    }
    let span = t[t.len() - 1] - t[0];
    Ok(Alignment {
        per_axis: per_axis / span,
        norm: norm / span,
    })
}

fn indices(log: &RunLog, w: &Window) -> Vec<usize> {
    log.ticks
        .iter()
        .enumerate()
        .filter(|(_, k)| w.contains(k.t))
        .map(|(i, _)| i)
        .collect()
}

fn check_robot(log: &RunLog, robot: usize) -> Result<()> {
    if robot >= log.meta.robots.len() {
        return Err(Error::Input(format!(
            "robot {robot} not in log `{}` ({} robots)",
            log.meta.name,
            log.meta.robots.len()
        )));
    }
    Ok(())
}

/// Alignment metric of `robot` over `segment`.
pub fn alignment_metric(log: &RunLog, robot: usize, segment: &SegmentSpec) -> Result<Alignment> {
    check_robot(log, robot)?;
    let idx = indices(log, &segment.window());
    if idx.len() < 2 {
        return Err(Error::EmptyWindow(format!(
            "segment `{}` [{}, {}] has fewer than two samples in `{}`",
            segment.label, segment.t_s, segment.t_e, log.meta.name
        )));
    }
    let t: Vec<f64> = idx.iter().map(|&i| log.ticks[i].t).collect();
    let ee: Vec<_> = idx.iter().map(|&i| log.ticks[i].robots[robot].ee_position).collect();
    let hand: Vec<_> = idx.iter().map(|&i| log.ticks[i].human_position).collect();
    alignment_from_series(&t, &ee, &hand)
}

/// Sample mean and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stats {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

impl Stats {
    pub fn of(values: &[f64]) -> Result<Self> {
        let n = values.len();
        if n == 0 {
            return Err(Error::EmptyWindow("no samples".into()));
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Ok(Self { mean, stderr, n })
    }
}

fn series_stats(log: &RunLog, robot: usize, windows: &[Window], f: impl Fn(usize) -> f64) -> Result<Stats> {
    check_robot(log, robot)?;
    let values: Vec<f64> = windows.iter().flat_map(|w| indices(log, w)).map(f).collect();
    Stats::of(&values).map_err(|_| Error::EmptyWindow(format!("no samples of `{}` in the requested window", log.meta.name)))
}

/// Statistics of `alpha` over the ticks inside `window`.
pub fn alpha_stats(log: &RunLog, robot: usize, window: &Window) -> Result<Stats> {
    series_stats(log, robot, &[*window], |i| log.ticks[i].robots[robot].alpha)
}

/// Statistics of `‖F_H‖` over the ticks inside `window`.
pub fn force_stats(log: &RunLog, robot: usize, window: &Window) -> Result<Stats> {
    series_stats(log, robot, &[*window], |i| log.ticks[i].robots[robot].force.norm())
}

/// `alpha` statistics pooled over several segments.
pub fn motion_alpha_stats(log: &RunLog, robot: usize, segments: &[SegmentSpec]) -> Result<Stats> {
    let w: Vec<Window> = segments.iter().map(SegmentSpec::window).collect();
    series_stats(log, robot, &w, |i| log.ticks[i].robots[robot].alpha)
}

/// `‖F_H‖` statistics pooled over several segments.
pub fn motion_force_stats(log: &RunLog, robot: usize, segments: &[SegmentSpec]) -> Result<Stats> {
    let w: Vec<Window> = segments.iter().map(SegmentSpec::window).collect();
    series_stats(log, robot, &w, |i| log.ticks[i].robots[robot].force.norm())
}

/// Largest drop of a robot's tool point below its segment-start height.
pub fn vertical_drop(log: &RunLog, robot: usize, segment: &SegmentSpec) -> Result<f64> {
    check_robot(log, robot)?;
    let idx = indices(log, &segment.window());
    let first = *idx
        .first()
        .ok_or_else(|| Error::EmptyWindow(format!("segment `{}` is empty", segment.label)))?;
    let z0 = log.ticks[first].robots[robot].ee_position.z;
    Ok(idx
        .iter()
        .map(|&i| z0 - log.ticks[i].robots[robot].ee_position.z)
        .fold(0.0, f64::max))
}

/// Root-mean-square distance between one robot's tool paths in two runs,
/// matched tick by tick.
pub fn path_rms_difference(a: &RunLog, b: &RunLog, robot: usize) -> Result<f64> {
    check_robot(a, robot)?;
    check_robot(b, robot)?;
    if a.ticks.len() != b.ticks.len() {
        return Err(Error::Input(format!(
            "runs have different lengths ({} vs {} ticks)",
            a.ticks.len(),
            b.ticks.len()
        )));
    }
    if a.ticks.is_empty() {
        return Err(Error::EmptyWindow("runs have no ticks".into()));
    }
    let sum: f64 = a
        .ticks
        .iter()
        .zip(&b.ticks)
        .map(|(x, y)| (x.robots[robot].ee_position - y.robots[robot].ee_position).norm_squared())
        .sum();
    Ok((sum / a.ticks.len() as f64).sqrt())
}

/// Largest drop of the hand below its segment-start height.
pub fn hand_vertical_drop(log: &RunLog, segment: &SegmentSpec) -> Result<f64> {
    let idx = indices(log, &segment.window());
    let first = *idx
        .first()
        .ok_or_else(|| Error::EmptyWindow(format!("segment `{}` is empty", segment.label)))?;
    let z0 = log.ticks[first].human_position.z;
    Ok(idx.iter().map(|&i| z0 - log.ticks[i].human_position.z).fold(0.0, f64::max))
}

/// Report text and CSV tables, kept in memory until written.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub summary: String,
    /// `(file name, contents)` pairs.
    pub tables: Vec<(String, String)>,
}

impl Report {
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut written = Vec::new();
        let summary = dir.join("summary.txt");
        std::fs::write(&summary, &self.summary).map_err(|e| Error::io(&summary, e))?;
        written.push(summary);
        for (name, body) in &self.tables {
            let p = dir.join(name);
            std::fs::write(&p, body).map_err(|e| Error::io(&p, e))?;
            written.push(p);
        }
        Ok(written)
    }
}

fn f(v: f64) -> String {
    format!("{v}")
}

/// Per-run tables (`<run>_alpha.csv`, `<run>_velocity.csv`, `<run>_dam.csv`,
/// `<run>_force.csv`), a comparison table of every run against the first,
/// and a plain-text summary.
pub fn report(logs: &[RunLog], specs: &[SegmentSpec]) -> Result<Report> {
    if logs.is_empty() {
        return Err(Error::Input("report needs at least one log".into()));
    }
    let robots = logs[0].meta.robots.len();
    for l in logs {
        if l.meta.robots.len() != robots {
            return Err(Error::Input(format!(
                "log `{}` has {} robots, `{}` has {robots}",
                l.meta.name,
                l.meta.robots.len(),
                logs[0].meta.name
            )));
        }
        for s in specs {
            let span = Window::whole(l);
            if s.t_s < span.t_s - 1e-9 || s.t_e > span.t_e + 1e-9 || !(s.t_s < s.t_e) {
                return Err(Error::Input(format!(
                    "segment `{}` [{}, {}] lies outside log `{}` [{}, {}]",
                    s.label, s.t_s, s.t_e, l.meta.name, span.t_s, span.t_e
                )));
            }
        }
    }

    let mut tables = Vec::new();
    let mut summary = String::new();
    let mut dams: Vec<Vec<Vec<Alignment>>> = Vec::new();
    for log in logs {
        let name = &log.meta.name;
        let mut alpha = String::from("t");
        let mut vel = String::from("t,vh_x,vh_y,vh_z");
        for i in 0..robots {
            write!(alpha, ",r{i}_alpha").unwrap();
            write!(vel, ",r{i}_vee_x,r{i}_vee_y,r{i}_vee_z,r{i}_vadm_x,r{i}_vadm_y,r{i}_vadm_z").unwrap();
        }
        alpha.push('\n');
        vel.push('\n');
        for k in &log.ticks {
            alpha.push_str(&f(k.t));
            vel.push_str(&f(k.t));
            for c in k.v_h.iter() {
                write!(vel, ",{}", f(*c)).unwrap();
            }
            for r in &k.robots {
                write!(alpha, ",{}", f(r.alpha)).unwrap();
                for c in r.ee_velocity.iter().chain(r.v_adm.iter()) {
                    write!(vel, ",{}", f(*c)).unwrap();
                }
            }
            alpha.push('\n');
            vel.push('\n');
        }
        tables.push((format!("{name}_alpha.csv"), alpha));
        tables.push((format!("{name}_velocity.csv"), vel));

        let mut dam = String::from("robot,segment,dam_x,dam_y,dam_z,dam_norm\n");
        let mut force = String::from("robot,window,force_mean,force_stderr,alpha_mean,alpha_stderr,samples\n");
        let mut per_robot = Vec::new();
        writeln!(summary, "run {name} ({:?}, {} ticks)", log.status, log.ticks.len()).unwrap();
        for i in 0..robots {
            let rname = &log.meta.robots[i].name;
            let mut per_seg = Vec::new();
            for s in specs {
                let a = alignment_metric(log, i, s)?;
                writeln!(
                    dam,
                    "{rname},{},{},{},{},{}",
                    s.label,
                    f(a.per_axis.x),
                    f(a.per_axis.y),
                    f(a.per_axis.z),
                    f(a.norm)
                )
                .unwrap();
                let fs = force_stats(log, i, &s.window())?;
                let al = alpha_stats(log, i, &s.window())?;
                writeln!(
                    force,
                    "{rname},{},{},{},{},{},{}",
                    s.label,
                    f(fs.mean),
                    f(fs.stderr),
                    f(al.mean),
                    f(al.stderr),
                    fs.n
                )
                .unwrap();
                per_seg.push(a);
            }
            let whole = Window::whole(log);
            let fs = force_stats(log, i, &whole)?;
            let al = alpha_stats(log, i, &whole)?;
            writeln!(force, "{rname},all,{},{},{},{},{}", f(fs.mean), f(fs.stderr), f(al.mean), f(al.stderr), fs.n).unwrap();
            let (ma, mf) = if specs.is_empty() {
                (al, fs)
            } else {
                (motion_alpha_stats(log, i, specs)?, motion_force_stats(log, i, specs)?)
            };
            if !specs.is_empty() {
                writeln!(
                    force,
                    "{rname},motion,{},{},{},{},{}",
                    f(mf.mean),
                    f(mf.stderr),
                    f(ma.mean),
                    f(ma.stderr),
                    mf.n
                )
                .unwrap();
            }
            writeln!(
                summary,
                "  {rname}: alpha {:.3} ± {:.3}, |F_H| {:.3} ± {:.3} N (over time, motion segments)",
                ma.mean, ma.stderr, mf.mean, mf.stderr
            )
            .unwrap();
            for (s, a) in specs.iter().zip(&per_seg) {
                writeln!(
                    summary,
                    "    {:<10} D_AM x {:.4} y {:.4} z {:.4} norm {:.4} m",
                    s.label, a.per_axis.x, a.per_axis.y, a.per_axis.z, a.norm
                )
                .unwrap();
            }
            per_robot.push(per_seg);
        }
        tables.push((format!("{name}_dam.csv"), dam));
        tables.push((format!("{name}_force.csv"), force));
        dams.push(per_robot);
    }

    if logs.len() > 1 {
        let reference = &logs[0].meta.name;
        let mut cmp = String::from("run,reference,robot,segment,delta_x,delta_y,delta_z,delta_norm\n");
        writeln!(summary, "comparison against {reference} (run minus reference)").unwrap();
        for (j, log) in logs.iter().enumerate().skip(1) {
            for i in 0..robots {
                for (s, (a, b)) in specs.iter().zip(dams[j][i].iter().zip(&dams[0][i])) {
                    let d = a.per_axis - b.per_axis;
                    writeln!(
                        cmp,
                        "{},{reference},{},{},{},{},{},{}",
                        log.meta.name,
                        logs[0].meta.robots[i].name,
                        s.label,
                        f(d.x),
                        f(d.y),
                        f(d.z),
                        f(a.norm - b.norm)
                    )
                    .unwrap();
                    writeln!(
                        summary,
                        "  {} {} {:<10} ΔD_AM x {:+.4} y {:+.4} z {:+.4}",
                        log.meta.name, logs[0].meta.robots[i].name, s.label, d.x, d.y, d.z
                    )
                    .unwrap();
                }
            }
        }
        // spread of per-run means, for repeated runs of one condition
        let mut over_runs = String::from("robot,quantity,mean,stderr,runs\n");
        for i in 0..robots {
            let alphas: Vec<f64> = logs
                .iter()
                .map(|l| alpha_stats(l, i, &Window::whole(l)).map(|s| s.mean))
                .collect::<Result<_>>()?;
            let forces: Vec<f64> = logs
                .iter()
                .map(|l| force_stats(l, i, &Window::whole(l)).map(|s| s.mean))
                .collect::<Result<_>>()?;
            let sa = Stats::of(&alphas)?;
            let sf = Stats::of(&forces)?;
            let rname = &logs[0].meta.robots[i].name;
            writeln!(over_runs, "{rname},alpha,{},{},{}", f(sa.mean), f(sa.stderr), sa.n).unwrap();
            writeln!(over_runs, "{rname},force,{},{},{}", f(sf.mean), f(sf.stderr), sf.n).unwrap();
        }
        tables.push((format!("{reference}_comparison.csv"), cmp));
        tables.push((format!("{reference}_over_runs.csv"), over_runs));
    }

    Ok(Report { summary, tables })
}
