//! Command-line front end: validate scenario files, run one or many
//! scenarios, build reports from saved logs, and rerun the two bundled
//! experiments with their pass/fail checks.
//!
//! Exit codes: 0 success, 1 invalid input, 2 run failure, 3 a check failed.

use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::metrics::{
    alignment_metric, hand_vertical_drop, motion_alpha_stats, motion_force_stats, path_rms_difference, report, Axis,
    SegmentSpec,
};
use crate::sim::{baseline_mode, batch, RunLog, RunStatus, Scenario, ScenarioConfig};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INVALID: u8 = 1;
pub const EXIT_RUN_FAILED: u8 = 2;
pub const EXIT_CHECK_FAILED: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "cocarry", version, about = "Human and multi-robot co-transportation simulator")]
pub struct Cli {
    /// Only print errors.
    #[arg(long, short, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check scenario files without running them.
    Validate {
        #[arg(long = "config", required = true, num_args = 1..)]
        config: Vec<PathBuf>,
    },
    /// Run one scenario and write its log.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        out: OutDir,
        /// Replace the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run several scenarios in parallel and write their logs.
    Batch {
        #[arg(long = "config", required = true, num_args = 1..)]
        config: Vec<PathBuf>,
        #[command(flatten)]
        out: OutDir,
        #[arg(long, default_value_t = default_jobs())]
        jobs: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Build report tables from saved run logs. The first log is the
    /// reference for the comparison table.
    Report {
        #[arg(required = true)]
        logs: Vec<PathBuf>,
        #[command(flatten)]
        out: OutDir,
    },
    /// Run a bundled experiment with the adaptive interface and the
    /// admittance baseline, write logs and report, and check the outcome.
    Reproduce {
        experiment: Experiment,
        #[command(flatten)]
        out: OutDir,
        #[arg(long, default_value_t = 2)]
        jobs: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Debug, Args)]
pub struct OutDir {
    /// Output directory.
    #[arg(long, env = "COCARRY_OUT", default_value = "cocarry-out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Experiment {
    Straps,
    Closet,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Straps => "straps",
            Experiment::Closet => "closet",
        }
    }
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Path of a scenario shipped with the crate.
pub fn bundled_scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join("scenarios")
        .join(format!("{name}.scenario"))
}

/// One named pass/fail check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

fn vertical_segment(segments: &[SegmentSpec]) -> Result<&SegmentSpec> {
    segments
        .iter()
        .find(|s| s.axis == Axis::Z)
        .ok_or_else(|| Error::Input("no vertical segment in the scenario".into()))
}

/// Strap experiment: high `alpha`, better alignment and lower force than the
/// baseline, and the vertical move reaching the robots only under the
/// adaptive interface.
pub fn straps_checks(aci: &RunLog, baseline: &RunLog, segments: &[SegmentSpec]) -> Result<Vec<Check>> {
    let robots = aci.meta.robots.len();
    let names: Vec<&str> = aci.meta.robots.iter().map(|r| r.name.as_str()).collect();
    let mut checks = Vec::new();

    let alphas = (0..robots)
        .map(|i| motion_alpha_stats(aci, i, segments).map(|s| s.mean))
        .collect::<Result<Vec<_>>>()?;
    checks.push(Check::new(
        "straps-alpha",
        alphas.iter().all(|&a| a > 0.8),
        format!("mean alpha during motion {} (needs > 0.8)", listing(&names, &alphas, 3)),
    ));

    let mut worse = Vec::new();
    for i in 0..robots {
        for s in segments {
            let a = alignment_metric(aci, i, s)?;
            let b = alignment_metric(baseline, i, s)?;
            for (k, axis) in ["x", "y", "z"].iter().enumerate() {
                if !(b.per_axis[k] > a.per_axis[k]) {
                    worse.push(format!(
                        "{} {} {axis} ({:.4} vs {:.4})",
                        names[i], s.label, a.per_axis[k], b.per_axis[k]
                    ));
                }
            }
        }
    }
    checks.push(Check::new(
        "straps-alignment",
        worse.is_empty(),
        if worse.is_empty() {
            format!("baseline D_AM above ACI on every axis of {} segments for every robot", segments.len())
        } else {
            format!("ACI not better on {}", worse.join(", "))
        },
    ));

    let seg = vertical_segment(segments)?;
    let hand = hand_vertical_drop(aci, seg)?;
    let drop = |log: &RunLog| -> Result<Vec<f64>> {
        (0..robots)
            .map(|i| crate::metrics::vertical_drop(log, i, seg).map(|d| d / hand))
            .collect()
    };
    let base_drop = drop(baseline)?;
    checks.push(Check::new(
        "straps-down-up-baseline",
        base_drop.iter().all(|&r| r < 0.25),
        format!("baseline drop / hand drop {} (needs < 0.25)", listing(&names, &base_drop, 3)),
    ));
    let aci_drop = drop(aci)?;
    checks.push(Check::new(
        "straps-down-up-aci",
        aci_drop.iter().all(|&r| r > 0.8),
        format!("ACI drop / hand drop {} (needs > 0.8)", listing(&names, &aci_drop, 3)),
    ));

    let fa = (0..robots)
        .map(|i| motion_force_stats(aci, i, segments).map(|s| s.mean))
        .collect::<Result<Vec<_>>>()?;
    let fb = (0..robots)
        .map(|i| motion_force_stats(baseline, i, segments).map(|s| s.mean))
        .collect::<Result<Vec<_>>>()?;
    checks.push(Check::new(
        "straps-force",
        fa.iter().zip(&fb).all(|(a, b)| b > a),
        format!(
            "mean |F_H| ACI {} N, baseline {} N",
            listing(&names, &fa, 3),
            listing(&names, &fb, 3)
        ),
    ));
    Ok(checks)
}

/// Closet experiment: low `alpha`, robots sharing the load evenly, and the
/// adaptive interface behaving like the baseline.
pub fn closet_checks(aci: &RunLog, baseline: &RunLog, segments: &[SegmentSpec]) -> Result<Vec<Check>> {
    let robots = aci.meta.robots.len();
    let names: Vec<&str> = aci.meta.robots.iter().map(|r| r.name.as_str()).collect();
    let mut checks = Vec::new();

    let alphas = (0..robots)
        .map(|i| motion_alpha_stats(aci, i, segments).map(|s| s.mean))
        .collect::<Result<Vec<_>>>()?;
    checks.push(Check::new(
        "closet-alpha",
        alphas.iter().all(|&a| a < 0.15),
        format!("mean alpha during motion {} (needs < 0.15)", listing(&names, &alphas, 3)),
    ));

    let forces = (0..robots)
        .map(|i| motion_force_stats(aci, i, segments).map(|s| s.mean))
        .collect::<Result<Vec<_>>>()?;
    let hi = forces.iter().copied().fold(f64::MIN, f64::max);
    let lo = forces.iter().copied().fold(f64::MAX, f64::min);
    checks.push(Check::new(
        "closet-force-balance",
        hi - lo <= 0.3 * hi,
        format!("mean |F_H| {} N (spread must be within 30% of the larger)", listing(&names, &forces, 3)),
    ));

    let rms = (0..robots)
        .map(|i| path_rms_difference(aci, baseline, i))
        .collect::<Result<Vec<_>>>()?;
    checks.push(Check::new(
        "closet-baseline-match",
        rms.iter().all(|&d| d < 0.02),
        format!("tool path RMS difference ACI vs baseline {} m (needs < 0.02)", listing(&names, &rms, 4)),
    ));
    Ok(checks)
}

fn listing(names: &[&str], values: &[f64], digits: usize) -> String {
    names
        .iter()
        .zip(values)
        .map(|(n, v)| format!("{n} {v:.digits$}"))
        .collect::<Vec<_>>()
        .join(", ")
}

struct Console {
    quiet: bool,
}

impl Console {
    fn say(&self, line: impl fmt::Display) {
        if !self.quiet {
            println!("{line}");
        }
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run_cli<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(cli),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            code
        }
    }
}

/// Sets up logging at `warn`, or `error` when quiet; `RUST_LOG` overrides.
pub fn init_logging(quiet: bool) {
    let level = if quiet { "error" } else { "warn" };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
}

pub fn execute(cli: Cli) -> u8 {
    let console = Console { quiet: cli.quiet };
    match cli.command {
        Command::Validate { config } => validate(&console, &config),
        Command::Run { config, out, seed } => run_many(&console, &[config], &out.out, 1, seed),
        Command::Batch { config, out, jobs, seed } => run_many(&console, &config, &out.out, jobs, seed),
        Command::Report { logs, out } => build_report(&console, &logs, &out.out),
        Command::Reproduce {
            experiment,
            out,
            jobs,
            seed,
        } => reproduce(&console, experiment, &out.out, jobs, seed),
    }
}

fn validate(console: &Console, paths: &[PathBuf]) -> u8 {
    let mut code = EXIT_OK;
    for p in paths {
        let config = match ScenarioConfig::from_file(p) {
            Ok(c) => c,
            Err(e) => {
                let kind = if e.is_io_or_parse() { "cannot read" } else { "invalid" };
                eprintln!("{}: {kind}: {e}", p.display());
                code = EXIT_INVALID;
                continue;
            }
        };
        let problems = config.diagnostics();
        if !problems.is_empty() {
            for e in &problems {
                eprintln!("{}: invalid: {e}", p.display());
            }
            code = EXIT_INVALID;
            continue;
        }
        if let Err(e) = Scenario::build(&config) {
            eprintln!("{}: invalid: {e}", p.display());
            code = EXIT_INVALID;
            continue;
        }
        console.say(format!("{}: ok", p.display()));
    }
    code
}

fn load_configs(paths: &[PathBuf], seed: Option<u64>) -> std::result::Result<Vec<ScenarioConfig>, u8> {
    let mut configs = Vec::with_capacity(paths.len());
    let mut failed = false;
    for p in paths {
        match ScenarioConfig::from_file(p).and_then(|c| c.validate().map(|_| c)) {
            Ok(mut c) => {
                if let Some(s) = seed {
                    c.seed = s;
                }
                configs.push(c);
            }
            Err(e) => {
                eprintln!("{}: {e}", p.display());
                failed = true;
            }
        }
    }
    if failed {
        Err(EXIT_INVALID)
    } else {
        Ok(configs)
    }
}

/// Runs the configs, writes every log that was produced, and returns the
/// logs in input order (`None` where a run could not start).
fn run_and_write(console: &Console, configs: &[ScenarioConfig], out: &Path, jobs: usize) -> (Vec<Option<RunLog>>, u8) {
    let mut code = EXIT_OK;
    let mut logs = Vec::with_capacity(configs.len());
    for (config, result) in configs.iter().zip(batch(configs, jobs)) {
        match result {
            Ok(log) => {
                match log.write(out, Some(config)) {
                    Ok((csv, _)) => console.say(format!(
                        "{}: {} ticks, real-time factor {:.1}, log {}",
                        config.name,
                        log.ticks.len(),
                        log.real_time_factor().unwrap_or(0.0),
                        csv.display()
                    )),
                    Err(e) => {
                        eprintln!("{}: {e}", config.name);
                        code = EXIT_RUN_FAILED;
                    }
                }
                if let RunStatus::Aborted { t, message } = &log.status {
                    eprintln!("{}: aborted at t = {t}: {message}", config.name);
                    code = EXIT_RUN_FAILED;
                }
                logs.push(Some(log));
            }
            Err(e) => {
                eprintln!("{}: {e}", config.name);
                code = EXIT_RUN_FAILED;
                logs.push(None);
            }
        }
    }
    (logs, code)
}

fn run_many(console: &Console, paths: &[PathBuf], out: &Path, jobs: usize, seed: Option<u64>) -> u8 {
    let configs = match load_configs(paths, seed) {
        Ok(c) => c,
        Err(code) => return code,
    };
    run_and_write(console, &configs, out, jobs).1
}

fn build_report(console: &Console, paths: &[PathBuf], out: &Path) -> u8 {
    let mut logs = Vec::with_capacity(paths.len());
    for p in paths {
        match RunLog::load(p) {
            Ok(l) => logs.push(l),
            Err(e) => {
                eprintln!("{}: {e}", p.display());
                return EXIT_INVALID;
            }
        }
    }
    let segments = logs[0].meta.segments.clone();
    match report(&logs, &segments).and_then(|r| r.write(out).map(|files| (r, files))) {
        Ok((r, files)) => {
            console.say(&r.summary);
            console.say(format!("wrote {} files to {}", files.len(), out.display()));
            EXIT_OK
        }
        Err(e) => {
            eprintln!("report: {e}");
            if matches!(e, Error::Io { .. }) {
                EXIT_RUN_FAILED
            } else {
                EXIT_INVALID
            }
        }
    }
}

fn reproduce(console: &Console, experiment: Experiment, out: &Path, jobs: usize, seed: Option<u64>) -> u8 {
    let path = bundled_scenario(experiment.name());
    let configs = match load_configs(&[path], seed) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let config = &configs[0];
    let pair = [config.clone(), baseline_mode(config)];
    let dir = out.join(experiment.name());
    let (logs, code) = run_and_write(console, &pair, &dir, jobs);
    if code != EXIT_OK {
        return code;
    }
    let logs: Vec<RunLog> = logs.into_iter().flatten().collect();
    let segments = config.segments.clone();
    let r = match report(&logs, &segments).and_then(|r| r.write(&dir).map(|_| r)) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("report: {e}");
            return EXIT_RUN_FAILED;
        }
    };
    console.say(&r.summary);
    let checks = match experiment {
        Experiment::Straps => straps_checks(&logs[0], &logs[1], &segments),
        Experiment::Closet => closet_checks(&logs[0], &logs[1], &segments),
    };
    let checks = match checks {
        Ok(c) => c,
        Err(e) => {
            eprintln!("checks: {e}");
            return EXIT_RUN_FAILED;
        }
    };
    for c in &checks {
        console.say(c);
    }
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    if failed.is_empty() {
        EXIT_OK
    } else {
        eprintln!("failed: {}", failed.join(", "));
        EXIT_CHECK_FAILED
    }
}
