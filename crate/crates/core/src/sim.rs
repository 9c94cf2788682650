//! Fixed-step orchestration of a co-carrying run.
//!
//! Every tick follows the same order: link forces from the frozen world
//! snapshot, each robot's interface and whole-body controller, robot
//! integration, object integration. A robot's controller only ever sees an
//! [`Observation`] built from its own state, its own force sensor and the
//! shared hand velocity.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::{DVector, Matrix3, Translation3, UnitQuaternion, Vector3, Vector6};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::aci::{AciOutput, AciParams, AciState, AlphaMode};
use crate::error::{Error, Result};
use crate::math::{linear, Pose};
use crate::metrics::SegmentSpec;
use crate::model::{RobotModel, WholeBodyState, BASE_DOF, STANDARD_GRAVITY};
use crate::wbc_ik::{self, IkConfig, IkParams};
use crate::wbc_impedance::{self, ImpedanceConfig, ImpedanceParams};
use crate::world::{
    Agent, CouplingLink, EndPoint, ForceSensor, HumanTrajectory, LinkKind, ObjectBody, World,
    DEFAULT_RIGID_DAMPING, DEFAULT_RIGID_STIFFNESS, DEFAULT_STRAP_DAMPING, DEFAULT_STRAP_STIFFNESS,
};

pub const SCENARIO_VERSION: u32 = 1;
pub const LOG_FORMAT_VERSION: u32 = 1;
pub const MAX_DT: f64 = 0.01;
/// Largest `h * sqrt(k)` (s·sqrt(N/m)) accepted for a stiff strap sub-step.
pub const STIFF_STEP_BOUND: f64 = 0.025;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    Impedance,
    Ik,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HumanConfig {
    /// CSV trajectory, relative to the scenario file.
    #[serde(default)]
    pub trajectory: Option<PathBuf>,
    /// Hand held still at this position instead of a trajectory.
    #[serde(default)]
    pub stationary: Option<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectConfig {
    pub mass: f64,
    /// Box dimensions for a uniform-density inertia.
    #[serde(default)]
    pub size: Option<[f64; 3]>,
    /// Explicit inertia `[ixx, iyy, izz, ixy, ixz, iyz]`; overrides `size`.
    #[serde(default)]
    pub inertia: Option<[f64; 6]>,
    pub position: [f64; 3],
    #[serde(default)]
    pub rpy: [f64; 3],
    /// Body-frame attachment points relative to the center of mass.
    pub attachments: Vec<[f64; 3]>,
    #[serde(default)]
    pub linear_damping: f64,
    #[serde(default)]
    pub angular_damping: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotConfig {
    pub name: String,
    /// `moca`, `kairos`, or a model file relative to the scenario file.
    pub model: String,
    pub controller: ControllerKind,
    /// Base pose `[x, y, yaw]`.
    pub base: [f64; 3],
    /// Tool-point target relative to the link's object attachment, world frame.
    #[serde(default)]
    pub grasp_offset: [f64; 3],
    #[serde(default)]
    pub aci: AciParams,
    #[serde(default)]
    pub impedance: Option<ImpedanceConfig>,
    #[serde(default)]
    pub ik: Option<IkConfig>,
    /// Force sensor noise standard deviation per axis (N).
    #[serde(default)]
    pub noise_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkConfig {
    pub kind: LinkKind,
    /// `human`, a robot name, or `robot:<index>`.
    pub agent: String,
    pub attachment: usize,
    /// Human-side point in the hand frame. For rigid human links the default
    /// makes both ends coincide at the start.
    #[serde(default)]
    pub offset: Option<[f64; 3]>,
    /// Straps only; defaults to the initial end-point distance.
    #[serde(default)]
    pub rest_length: Option<f64>,
    #[serde(default)]
    pub stiffness: Option<f64>,
    #[serde(default)]
    pub damping: Option<f64>,
}

fn default_dt() -> f64 {
    1e-3
}
fn default_settle() -> f64 {
    3.0
}
fn default_substeps() -> u32 {
    1
}
fn default_gravity() -> f64 {
    STANDARD_GRAVITY
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub version: u32,
    pub name: String,
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub duration: f64,
    #[serde(default)]
    pub seed: u64,
    /// Time the world is left to settle with every reference held before
    /// the force sensors are tared and the run starts (s).
    #[serde(default = "default_settle")]
    pub settle_time: f64,
    /// Physics sub-steps per control tick.
    #[serde(default = "default_substeps")]
    pub physics_substeps: u32,
    #[serde(default = "default_gravity")]
    pub gravity: f64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    pub human: HumanConfig,
    pub object: ObjectConfig,
    pub robots: Vec<RobotConfig>,
    pub links: Vec<LinkConfig>,
    #[serde(default)]
    pub segments: Vec<SegmentSpec>,
    /// Directory relative paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Self> {
        let mut cfg: ScenarioConfig = toml::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })?;
        cfg.base_dir = origin.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text, path)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn ticks(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }

    /// Every problem found, each naming the offending field.
    pub fn diagnostics(&self) -> Vec<Error> {
        let mut out = Vec::new();
        let mut push = |r: Result<()>| {
            if let Err(e) = r {
                out.push(e);
            }
        };
        if self.version != SCENARIO_VERSION {
            push(Err(Error::config("version", format!("unsupported version {} (expected {SCENARIO_VERSION})", self.version))));
        }
        if !(self.dt > 0.0 && self.dt <= MAX_DT) {
            push(Err(Error::config("dt", format!("must lie in (0, {MAX_DT}], got {}", self.dt))));
        }
        if !(self.duration > 0.0) || !self.duration.is_finite() {
            push(Err(Error::config("duration", "must be > 0")));
        } else if self.dt > 0.0 {
            let n = self.duration / self.dt;
            if (n - n.round()).abs() > 1e-6 * n.max(1.0) {
                push(Err(Error::config("duration", "must be a whole number of dt")));
            }
        }
        if !(self.settle_time >= 0.0) {
            push(Err(Error::config("settle_time", "must be >= 0")));
        }
        if self.physics_substeps == 0 {
            push(Err(Error::config("physics_substeps", "must be >= 1")));
        }
        if !(self.gravity >= 0.0) {
            push(Err(Error::config("gravity", "must be >= 0")));
        }
        match (&self.human.trajectory, &self.human.stationary) {
            (Some(_), Some(_)) | (None, None) => push(Err(Error::config(
                "human",
                "set exactly one of `trajectory` and `stationary`",
            ))),
            _ => {}
        }
        push(self.object_body().and_then(|o| o.validate("object")));
        if self.robots.is_empty() {
            push(Err(Error::config("robots", "at least one robot is required")));
        }
        for (i, r) in self.robots.iter().enumerate() {
            let loc = format!("robots[{i}]");
            if self.robots[..i].iter().any(|o| o.name == r.name) {
                push(Err(Error::config(format!("{loc}.name"), format!("duplicate robot name `{}`", r.name))));
            }
            let mut aci = r.aci.clone();
            aci.dt = self.dt;
            push(aci.validate(&format!("{loc}.aci")));
            match self.load_model(r) {
                Ok(m) => {
                    if let Some(imp) = &r.impedance {
                        push(imp.validate(m.dof(), &format!("{loc}.impedance")));
                    }
                }
                Err(e) => push(Err(Error::config(format!("{loc}.model"), e.to_string()))),
            }
            if let Some(ik) = &r.ik {
                push(ik.validate(&format!("{loc}.ik")));
            }
            match r.controller {
                ControllerKind::Impedance if r.ik.is_some() => push(Err(Error::config(
                    format!("{loc}.ik"),
                    "set for a robot with an impedance controller",
                ))),
                ControllerKind::Ik if r.impedance.is_some() => push(Err(Error::config(
                    format!("{loc}.impedance"),
                    "set for a robot with an ik controller",
                ))),
                _ => {}
            }
            if !(r.noise_std >= 0.0) {
                push(Err(Error::config(format!("{loc}.noise_std"), "must be >= 0")));
            }
            let count = self
                .links
                .iter()
                .filter(|l| self.agent_of(l).ok() == Some(Agent::Robot(i)))
                .count();
            if count != 1 {
                push(Err(Error::config(
                    format!("{loc}"),
                    format!("robot `{}` must have exactly one link, found {count}", r.name),
                )));
            }
        }
        let n_att = self.object.attachments.len();
        for (k, l) in self.links.iter().enumerate() {
            let loc = format!("links[{k}]");
            if let Err(e) = self.agent_of(l) {
                push(Err(e));
                continue;
            }
            let link = CouplingLink {
                kind: l.kind,
                agent: Agent::Human,
                attachment: l.attachment,
                agent_offset: Vector3::zeros(),
                rest_length: l.rest_length.unwrap_or(0.0),
                stiffness: l.stiffness.unwrap_or(0.0),
                damping: l.damping.unwrap_or(0.0),
            };
            push(link.validate(&loc, n_att).map_err(|e| match e {
                Error::Config { locator, message } => Error::config(
                    locator,
                    format!("{message} (link from `{}` to attachment {})", l.agent, l.attachment),
                ),
                other => other,
            }));
            if l.kind == LinkKind::Rigid && l.rest_length.is_some() {
                push(Err(Error::config(format!("{loc}.rest_length"), "only straps have a rest length")));
            }
        }
        for (k, s) in self.segments.iter().enumerate() {
            if !(s.t_s < s.t_e) || s.t_s < 0.0 || s.t_e > self.duration + 1e-9 {
                push(Err(Error::config(
                    format!("segments[{k}]"),
                    format!("needs 0 <= t_s < t_e <= duration, got [{}, {}]", s.t_s, s.t_e),
                )));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        match self.diagnostics().into_iter().next() {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }

    fn agent_of(&self, l: &LinkConfig) -> Result<Agent> {
        if l.agent == "human" {
            return Ok(Agent::Human);
        }
        if let Some(i) = self.robots.iter().position(|r| r.name == l.agent) {
            return Ok(Agent::Robot(i));
        }
        if let Some(idx) = l.agent.strip_prefix("robot:") {
            if let Ok(i) = idx.parse::<usize>() {
                if i < self.robots.len() {
                    return Ok(Agent::Robot(i));
                }
            }
        }
        let k = self.links.iter().position(|x| std::ptr::eq(x, l)).unwrap_or(0);
        Err(Error::config(format!("links[{k}].agent"), format!("unknown agent `{}`", l.agent)))
    }

    fn load_model(&self, r: &RobotConfig) -> Result<RobotModel> {
        let m = match r.model.as_str() {
            "moca" => RobotModel::moca(),
            "kairos" => RobotModel::kairos(),
            other => RobotModel::from_file(self.resolve(Path::new(other)))?,
        };
        m.validate()?;
        Ok(m)
    }

    fn object_body(&self) -> Result<ObjectBody> {
        let o = &self.object;
        let inertia = match (o.inertia, o.size) {
            (Some([xx, yy, zz, xy, xz, yz]), _) => Matrix3::new(xx, xy, xz, xy, yy, yz, xz, yz, zz),
            (None, Some(size)) => ObjectBody::box_inertia(o.mass, size),
            (None, None) => return Err(Error::config("object", "set `size` or `inertia`")),
        };
        let pose = Pose::from_parts(
            Translation3::new(o.position[0], o.position[1], o.position[2]),
            UnitQuaternion::from_euler_angles(o.rpy[0], o.rpy[1], o.rpy[2]),
        );
        let mut body = ObjectBody::new(o.mass, inertia, pose, o.attachments.iter().map(|a| Vector3::from(*a)).collect());
        body.linear_damping = o.linear_damping;
        body.angular_damping = o.angular_damping;
        Ok(body)
    }

    fn load_human(&self) -> Result<HumanTrajectory> {
        match (&self.human.trajectory, &self.human.stationary) {
            (Some(p), None) => HumanTrajectory::from_csv_file(self.resolve(p)),
            (None, Some(p)) => Ok(HumanTrajectory::stationary(Pose::translation(p[0], p[1], p[2]))),
            _ => Err(Error::config("human", "set exactly one of `trajectory` and `stationary`")),
        }
    }
}

/// Same scenario with every robot's interface pinned at `alpha = 0`, which
/// makes it a plain admittance controller.
pub fn baseline_mode(config: &ScenarioConfig) -> ScenarioConfig {
    let mut c = config.clone();
    for r in &mut c.robots {
        r.aci.alpha_mode = AlphaMode::Admittance;
    }
    if !c.name.ends_with("-baseline") {
        c.name.push_str("-baseline");
    }
    c
}

/// Same scenario with every strap set to stiffness `k`. Strap damping keeps
/// its ratio to `sqrt(k)`, and physics sub-steps are raised so that
/// `h * sqrt(k)` stays at or below `STIFF_STEP_BOUND`.
pub fn with_strap_stiffness(config: &ScenarioConfig, k: f64) -> ScenarioConfig {
    let mut c = config.clone();
    let mut k_max: f64 = 0.0;
    for l in &mut c.links {
        if l.kind == LinkKind::Strap {
            let k_old = l.stiffness.unwrap_or(DEFAULT_STRAP_STIFFNESS);
            let c_old = l.damping.unwrap_or(DEFAULT_STRAP_DAMPING);
            l.stiffness = Some(k);
            l.damping = Some(c_old * (k / k_old).sqrt());
            k_max = k_max.max(k);
        }
    }
    let needed = (c.dt * k_max.sqrt() / STIFF_STEP_BOUND).ceil() as u32;
    c.physics_substeps = c.physics_substeps.max(needed);
    c.name = format!("{}-k{k}", config.name);
    c
}

/// Everything a robot's controller may read in one tick.
#[derive(Debug, Clone, Copy)]
pub struct Observation<'a> {
    pub t: f64,
    pub state: &'a WholeBodyState,
    /// Own end-effector force `F_H`, world frame.
    pub force: Vector3<f64>,
    /// Hand velocity broadcast to every robot.
    pub v_h: Vector3<f64>,
}

#[derive(Debug, Clone)]
pub enum Controller {
    Impedance(ImpedanceParams),
    Ik(IkParams),
}

impl Controller {
    pub fn kind(&self) -> ControllerKind {
        match self {
            Controller::Impedance(_) => ControllerKind::Impedance,
            Controller::Ik(_) => ControllerKind::Ik,
        }
    }

    /// Torques for an impedance robot, joint velocities for an IK robot.
    pub fn command(&self, model: &RobotModel, state: &WholeBodyState, x_d: &Pose, xdot_d: &Vector6<f64>) -> Result<DVector<f64>> {
        Ok(match self {
            Controller::Impedance(p) => wbc_impedance::control_tick(model, state, x_d, xdot_d, p)?.tau,
            Controller::Ik(p) => wbc_ik::control_tick(model, state, x_d, xdot_d, p)?.dq_d,
        })
    }
}

/// One simulated robot: model, controller, interface, sensor and state.
#[derive(Debug, Clone)]
pub struct RobotAgent {
    pub name: String,
    pub model: RobotModel,
    pub controller: Controller,
    pub aci_params: AciParams,
    pub aci: AciState,
    pub sensor: ForceSensor,
    pub state: WholeBodyState,
    pub command: DVector<f64>,
}

#[derive(Debug, Clone)]
pub struct ControlOutput {
    pub aci: AciOutput,
    pub command: DVector<f64>,
}

impl RobotAgent {
    /// Interface and whole-body controller for one tick.
    pub fn control(&mut self, obs: Observation<'_>) -> Result<ControlOutput> {
        let aci = self.aci.tick(&self.aci_params, &obs.force, &obs.v_h);
        let command = self.controller.command(&self.model, obs.state, &aci.x_d, &aci.xdot_d)?;
        Ok(ControlOutput { aci, command })
    }

    pub fn hold(&self, x_d: &Pose) -> Result<DVector<f64>> {
        self.controller.command(&self.model, &self.state, x_d, &Vector6::zeros())
    }

    pub fn tool_point(&self) -> Result<(Pose, EndPoint, Vector6<f64>)> {
        let pose = self.model.forward_kinematics(&self.state.q)?;
        let j = self.model.whole_body_jacobian(&self.state.q)?;
        let tw = &j * &self.state.dq;
        let twist = Vector6::from_column_slice(tw.as_slice());
        let p = EndPoint {
            position: pose.translation.vector,
            velocity: linear(&twist),
        };
        Ok((pose, p, twist))
    }

    /// Advances the robot by `h` under the held command and the force its
    /// link exerts on the tool point.
    pub fn integrate(&mut self, force: &Vector3<f64>, h: f64) -> Result<()> {
        match &self.controller {
            Controller::Impedance(_) => {
                let j = self.model.whole_body_jacobian(&self.state.q)?;
                let j_lin = j.rows(0, 3);
                let tau_ext = j_lin.transpose() * force;
                let ddq = self
                    .model
                    .forward_dynamics(&self.state.q, &self.state.dq, &(&self.command + tau_ext))?;
                self.state.dq += ddq * h;
            }
            Controller::Ik(p) => {
                let a = 1.0 - (-h / p.velocity_time_constant).exp();
                let delta = (&self.command - &self.state.dq) * a;
                self.state.dq += delta;
            }
        }
        let dq = self.state.dq.clone();
        self.state.q += dq * h;
        Ok(())
    }
}

/// Arm configuration putting the tool point at `target` with the base fixed,
/// found by damped least squares from the home posture.
pub fn place_arm(model: &RobotModel, base: Vector3<f64>, target: &Vector3<f64>) -> Result<DVector<f64>> {
    let mut q = model.home(base);
    let n_a = model.arm_dof();
    let lambda2 = 1e-4;
    for _ in 0..500 {
        let p = model.forward_kinematics(&q)?.translation.vector;
        let e = target - p;
        if e.norm() < 1e-12 {
            break;
        }
        let j = model.arm_jacobian(&q)?;
        let jp = j.rows(0, 3).into_owned();
        let inner = &jp * jp.transpose() + Matrix3::identity() * lambda2;
        let step = jp.transpose() * inner.try_inverse().ok_or(Error::SingularTask)? * e;
        let scale = (0.2 / step.norm()).min(1.0);
        for i in 0..n_a {
            q[BASE_DOF + i] += step[i] * scale;
        }
    }
    let err = (target - model.forward_kinematics(&q)?.translation.vector).norm();
    if err > 1e-6 {
        return Err(Error::Input(format!("tool target out of reach (residual {err:.3e} m)")));
    }
    Ok(q)
}

/// Built scenario: world plus placed robots, before settling.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub world: World,
    pub robots: Vec<RobotAgent>,
}

impl Scenario {
    pub fn build(config: &ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let object = config.object_body()?;
        let human = config.load_human()?;
        let (t0, _) = human.span();
        let hand = human.sample(t0);

        let mut robots = Vec::with_capacity(config.robots.len());
        for (i, rc) in config.robots.iter().enumerate() {
            let loc = format!("robots[{i}]");
            let model = config.load_model(rc)?;
            let link = config
                .links
                .iter()
                .find(|l| config.agent_of(l).ok() == Some(Agent::Robot(i)))
                .expect("validated");
            let target = object.attachment_position(link.attachment) + Vector3::from(rc.grasp_offset);
            let base = Vector3::from(rc.base);
            let q = place_arm(&model, base, &target).map_err(|e| Error::config(format!("{loc}.base"), e.to_string()))?;
            let controller = match rc.controller {
                ControllerKind::Impedance => {
                    let mut p = rc.impedance.clone().unwrap_or_default().to_params(&model);
                    p.q_0 = q.clone();
                    Controller::Impedance(p)
                }
                ControllerKind::Ik => {
                    let mut p = rc.ik.clone().unwrap_or_default().to_params(&model);
                    p.q_0 = q.clone();
                    Controller::Ik(p)
                }
            };
            let mut aci_params = rc.aci.clone();
            aci_params.dt = config.dt;
            let x0 = model.forward_kinematics(&q)?;
            let n = model.dof();
            robots.push(RobotAgent {
                name: rc.name.clone(),
                aci: AciState::new(x0, &aci_params),
                aci_params,
                sensor: ForceSensor::new(rc.noise_std, config.seed, i as u64)?,
                state: WholeBodyState::at_rest(q),
                command: DVector::zeros(n),
                controller,
                model,
            });
        }

        let mut links = Vec::with_capacity(config.links.len());
        for l in &config.links {
            let agent = config.agent_of(l)?;
            let mut link = match l.kind {
                LinkKind::Rigid => CouplingLink::rigid(agent, l.attachment),
                LinkKind::Strap => CouplingLink::strap(agent, l.attachment, 0.0),
            };
            link.stiffness = l.stiffness.unwrap_or(match l.kind {
                LinkKind::Rigid => DEFAULT_RIGID_STIFFNESS,
                LinkKind::Strap => DEFAULT_STRAP_STIFFNESS,
            });
            link.damping = l.damping.unwrap_or(match l.kind {
                LinkKind::Rigid => DEFAULT_RIGID_DAMPING,
                LinkKind::Strap => DEFAULT_STRAP_DAMPING,
            });
            let obj_point = object.attachment_position(l.attachment);
            if agent == Agent::Human {
                link.agent_offset = match l.offset {
                    Some(o) => Vector3::from(o),
                    None => hand.pose.rotation.inverse() * (obj_point - hand.pose.translation.vector),
                };
            }
            let agent_pos = match agent {
                Agent::Human => hand.point(&link.agent_offset).position,
                Agent::Robot(i) => robots[i].model.forward_kinematics(&robots[i].state.q)?.translation.vector,
            };
            if l.kind == LinkKind::Strap {
                link.rest_length = l.rest_length.unwrap_or((obj_point - agent_pos).norm());
            }
            links.push(link);
        }

        Ok(Self {
            config: config.clone(),
            world: World {
                object,
                links,
                human,
                gravity: config.gravity,
            },
            robots,
        })
    }

    fn robot_points(&self) -> Result<Vec<EndPoint>> {
        self.robots.iter().map(|r| r.tool_point().map(|(_, p, _)| p)).collect()
    }

    fn link_of(&self, robot: usize) -> usize {
        self.world.robot_link(robot).expect("validated")
    }

    /// Advances physics over one control period under held commands.
    fn integrate(&mut self, t: f64, first_forces: Vec<Vector3<f64>>) -> Result<()> {
        let subs = self.config.physics_substeps.max(1);
        let h = self.config.dt / subs as f64;
        let mut forces = first_forces;
        for s in 0..subs {
            if s > 0 {
                let points = self.robot_points()?;
                forces = self.world.link_forces(t + s as f64 * h, &points);
            }
            for i in 0..self.robots.len() {
                let f = forces[self.link_of(i)];
                self.robots[i].integrate(&f, h)?;
            }
            self.world.step_object(&forces, h);
        }
        Ok(())
    }

    /// Holds every reference at the placement pose while the object comes to
    /// rest, then tares each force sensor.
    pub fn settle(&mut self) -> Result<()> {
        let (t0, _) = self.world.human.span();
        let holds: Vec<Pose> = self.robots.iter().map(|r| r.aci.x_d).collect();
        let steps = (self.config.settle_time / self.config.dt).round() as usize;
        for _ in 0..steps {
            let points = self.robot_points()?;
            let forces = self.world.link_forces(t0, &points);
            for (r, x_d) in self.robots.iter_mut().zip(&holds) {
                r.command = r.hold(x_d)?;
            }
            // the hand stays at its first sample while settling
            let subs = self.config.physics_substeps.max(1);
            let h = self.config.dt / subs as f64;
            let mut f = forces;
            for s in 0..subs {
                if s > 0 {
                    let points = self.robot_points()?;
                    f = self.world.link_forces(t0, &points);
                }
                for i in 0..self.robots.len() {
                    let fi = f[self.link_of(i)];
                    self.robots[i].integrate(&fi, h)?;
                }
                self.world.step_object(&f, h);
            }
        }
        let points = self.robot_points()?;
        let forces = self.world.link_forces(t0, &points);
        for i in 0..self.robots.len() {
            let raw = forces[self.link_of(i)];
            self.robots[i].sensor.set_tare(raw);
        }
        Ok(())
    }

    /// Runs the scenario from a settled state. `order` fixes the sequence in
    /// which robot controllers are evaluated.
    pub fn run_with_order(mut self, order: &[usize]) -> Result<RunLog> {
        let started = Instant::now();
        let n_ticks = self.config.ticks();
        let dt = self.config.dt;
        let (t0, _) = self.world.human.span();
        let mut log = RunLog::new(self.meta());
        for k in 0..=n_ticks {
            let t = k as f64 * dt;
            let hand = self.world.human.sample(t0 + t);
            let snapshot: Vec<(Pose, EndPoint, Vector6<f64>)> =
                self.robots.iter().map(|r| r.tool_point()).collect::<Result<_>>()?;
            let points: Vec<EndPoint> = snapshot.iter().map(|s| s.1).collect();
            let forces = self.world.link_forces(t0 + t, &points);

            let mut outputs: Vec<Option<(Vector3<f64>, ControlOutput)>> = vec![None; self.robots.len()];
            let mut failure = None;
            for &i in order {
                let link = self.link_of(i);
                let robot = &mut self.robots[i];
                let f_h = robot.sensor.measure(&forces[link]);
                let state = robot.state.clone();
                let obs = Observation {
                    t,
                    state: &state,
                    force: f_h,
                    v_h: hand.velocity,
                };
                match robot.control(obs) {
                    Ok(out) => {
                        robot.command = out.command.clone();
                        outputs[i] = Some((f_h, out));
                    }
                    Err(e) => {
                        failure = Some(e);
                        break;
                    }
                }
            }
            if let Some(e) = failure {
                log.status = RunStatus::Aborted {
                    t,
                    message: e.to_string(),
                };
                log::error!("run `{}` aborted at t = {t}: {e}", self.config.name);
                break;
            }

            let robots = self
                .robots
                .iter()
                .zip(&snapshot)
                .zip(outputs)
                .map(|((r, (pose, point, _)), out)| {
                    let (f_h, out) = out.expect("every robot evaluated");
                    RobotRecord {
                        force: f_h,
                        v_adm: out.aci.v_adm,
                        alpha: out.aci.alpha,
                        v_d: out.aci.v_d,
                        x_d: out.aci.x_d.translation.vector,
                        ee_position: point.position,
                        ee_orientation: *pose.rotation.quaternion(),
                        ee_velocity: point.velocity,
                        q: r.state.q.as_slice().to_vec(),
                        dq: r.state.dq.as_slice().to_vec(),
                        command: out.command.as_slice().to_vec(),
                    }
                })
                .collect();
            log.ticks.push(TickRecord {
                t,
                human_position: hand.pose.translation.vector,
                human_orientation: *hand.pose.rotation.quaternion(),
                v_h: hand.velocity,
                object_position: self.world.object.pose.translation.vector,
                object_orientation: *self.world.object.pose.rotation.quaternion(),
                robots,
                link_forces: forces.clone(),
            });
            if k == n_ticks {
                break;
            }
            if let Err(e) = self.integrate(t0 + t, forces) {
                log.status = RunStatus::Aborted {
                    t,
                    message: e.to_string(),
                };
                break;
            }
        }
        log.wall_time = Some(started.elapsed().as_secs_f64());
        Ok(log)
    }

    fn meta(&self) -> RunMeta {
        RunMeta {
            name: self.config.name.clone(),
            seed: self.config.seed,
            dt: self.config.dt,
            duration: self.config.duration,
            robots: self
                .robots
                .iter()
                .map(|r| RobotMeta {
                    name: r.name.clone(),
                    model: r.model.name.clone(),
                    controller: r.controller.kind(),
                    dof: r.model.dof(),
                })
                .collect(),
            links: self.world.links.len(),
            segments: self.config.segments.clone(),
        }
    }
}

/// Builds, settles and runs a scenario.
pub fn run(config: &ScenarioConfig) -> Result<RunLog> {
    let order: Vec<usize> = (0..config.robots.len()).collect();
    run_with_order(config, &order)
}

pub fn run_with_order(config: &ScenarioConfig, order: &[usize]) -> Result<RunLog> {
    let mut sorted = order.to_vec();
    sorted.sort_unstable();
    if sorted != (0..config.robots.len()).collect::<Vec<_>>() {
        return Err(Error::Input("robot order must be a permutation of the robot indices".into()));
    }
    let mut scenario = Scenario::build(config)?;
    scenario.settle()?;
    scenario.run_with_order(order)
}

/// Runs every scenario on a pool of `jobs` threads. Results keep the input
/// order and a failure only affects its own entry.
pub fn batch(configs: &[ScenarioConfig], jobs: usize) -> Vec<Result<RunLog>> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build();
    match pool {
        Ok(pool) => pool.install(|| configs.par_iter().map(run).collect()),
        Err(e) => {
            log::warn!("thread pool unavailable ({e}); running sequentially");
            configs.iter().map(run).collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Complete,
    Aborted { t: f64, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotMeta {
    pub name: String,
    pub model: String,
    pub controller: ControllerKind,
    pub dof: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub name: String,
    pub seed: u64,
    pub dt: f64,
    pub duration: f64,
    pub robots: Vec<RobotMeta>,
    pub links: usize,
    pub segments: Vec<SegmentSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobotRecord {
    pub force: Vector3<f64>,
    pub v_adm: Vector3<f64>,
    pub alpha: f64,
    pub v_d: Vector3<f64>,
    pub x_d: Vector3<f64>,
    pub ee_position: Vector3<f64>,
    pub ee_orientation: nalgebra::Quaternion<f64>,
    pub ee_velocity: Vector3<f64>,
    pub q: Vec<f64>,
    pub dq: Vec<f64>,
    /// Joint torques or joint velocity command, depending on the controller.
    pub command: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TickRecord {
    pub t: f64,
    pub human_position: Vector3<f64>,
    pub human_orientation: nalgebra::Quaternion<f64>,
    pub v_h: Vector3<f64>,
    pub object_position: Vector3<f64>,
    pub object_orientation: nalgebra::Quaternion<f64>,
    pub robots: Vec<RobotRecord>,
    /// Force each link exerts on its agent.
    pub link_forces: Vec<Vector3<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub meta: RunMeta,
    pub ticks: Vec<TickRecord>,
    pub status: RunStatus,
    /// Wall-clock time of the run (s). Not part of the CSV.
    pub wall_time: Option<f64>,
}

fn push3(row: &mut Vec<f64>, v: &Vector3<f64>) {
    row.extend_from_slice(v.as_slice());
}

fn push_quat(row: &mut Vec<f64>, q: &nalgebra::Quaternion<f64>) {
    row.extend_from_slice(&[q.w, q.i, q.j, q.k]);
}

const XYZ: [&str; 3] = ["x", "y", "z"];
const WXYZ: [&str; 4] = ["w", "x", "y", "z"];

impl RunLog {
    pub fn new(meta: RunMeta) -> Self {
        Self {
            meta,
            ticks: Vec::new(),
            status: RunStatus::Complete,
            wall_time: None,
        }
    }

    pub fn is_complete(&self) -> bool {
        self.status == RunStatus::Complete
    }

    pub fn times(&self) -> Vec<f64> {
        self.ticks.iter().map(|k| k.t).collect()
    }

    /// Simulated seconds per wall-clock second.
    pub fn real_time_factor(&self) -> Option<f64> {
        let simulated = self.ticks.last()?.t;
        self.wall_time.filter(|w| *w > 0.0).map(|w| simulated / w)
    }

    pub fn csv_header(&self) -> Vec<String> {
        let mut h = vec!["t".to_string()];
        h.extend(XYZ.iter().map(|a| format!("human_p{a}")));
        h.extend(WXYZ.iter().map(|a| format!("human_q{a}")));
        h.extend(XYZ.iter().map(|a| format!("human_v{a}")));
        h.extend(XYZ.iter().map(|a| format!("object_p{a}")));
        h.extend(WXYZ.iter().map(|a| format!("object_q{a}")));
        for (i, r) in self.meta.robots.iter().enumerate() {
            let p = format!("r{i}");
            h.extend(XYZ.iter().map(|a| format!("{p}_f{a}")));
            h.extend(XYZ.iter().map(|a| format!("{p}_vadm_{a}")));
            h.push(format!("{p}_alpha"));
            h.extend(XYZ.iter().map(|a| format!("{p}_vd_{a}")));
            h.extend(XYZ.iter().map(|a| format!("{p}_xd_{a}")));
            h.extend(XYZ.iter().map(|a| format!("{p}_ee_p{a}")));
            h.extend(WXYZ.iter().map(|a| format!("{p}_ee_q{a}")));
            h.extend(XYZ.iter().map(|a| format!("{p}_ee_v{a}")));
            h.extend((0..r.dof).map(|j| format!("{p}_q{j}")));
            h.extend((0..r.dof).map(|j| format!("{p}_dq{j}")));
            h.extend((0..r.dof).map(|j| format!("{p}_cmd{j}")));
        }
        for k in 0..self.meta.links {
            h.extend(XYZ.iter().map(|a| format!("l{k}_f{a}")));
        }
        h
    }

    fn row(tick: &TickRecord) -> Vec<f64> {
        let mut row = vec![tick.t];
        push3(&mut row, &tick.human_position);
        push_quat(&mut row, &tick.human_orientation);
        push3(&mut row, &tick.v_h);
        push3(&mut row, &tick.object_position);
        push_quat(&mut row, &tick.object_orientation);
        for r in &tick.robots {
            push3(&mut row, &r.force);
            push3(&mut row, &r.v_adm);
            row.push(r.alpha);
            push3(&mut row, &r.v_d);
            push3(&mut row, &r.x_d);
            push3(&mut row, &r.ee_position);
            push_quat(&mut row, &r.ee_orientation);
            push3(&mut row, &r.ee_velocity);
            row.extend_from_slice(&r.q);
            row.extend_from_slice(&r.dq);
            row.extend_from_slice(&r.command);
        }
        for f in &tick.link_forces {
            push3(&mut row, f);
        }
        row
    }

    /// Wide per-tick table; floats use the shortest exact representation.
    pub fn to_csv_string(&self) -> String {
        let mut out = self.csv_header().join(",");
        out.push('\n');
        for tick in &self.ticks {
            let row = Self::row(tick);
            let mut first = true;
            for v in row {
                if !first {
                    out.push(',');
                }
                first = false;
                write!(out, "{v}").expect("write to string");
            }
            out.push('\n');
        }
        out
    }

    /// SHA-256 of the CSV table.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_csv_string().as_bytes()))
    }

    pub fn from_csv_str(text: &str, meta: RunMeta, origin: &Path) -> Result<Self> {
        let parse_err = |message: String| Error::Parse {
            path: origin.to_path_buf(),
            message,
        };
        let mut log = RunLog::new(meta);
        let expected = log.csv_header();
        let mut rdr = csv::ReaderBuilder::new().from_reader(text.as_bytes());
        let header: Vec<String> = rdr
            .headers()
            .map_err(|e| parse_err(e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        if header != expected {
            return Err(parse_err("CSV header does not match the sidecar metadata".into()));
        }
        for (n, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| parse_err(e.to_string()))?;
            let vals: Vec<f64> = rec
                .iter()
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| parse_err(format!("row {}: non-numeric field", n + 1)))?;
            let mut it = vals.into_iter();
            let mut take = |k: usize| -> Vec<f64> { it.by_ref().take(k).collect() };
            let v3 = |v: Vec<f64>| Vector3::new(v[0], v[1], v[2]);
            let q4 = |v: Vec<f64>| nalgebra::Quaternion::new(v[0], v[1], v[2], v[3]);
            let t = take(1)[0];
            let human_position = v3(take(3));
            let human_orientation = q4(take(4));
            let v_h = v3(take(3));
            let object_position = v3(take(3));
            let object_orientation = q4(take(4));
            let mut robots = Vec::new();
            for r in &log.meta.robots {
                robots.push(RobotRecord {
                    force: v3(take(3)),
                    v_adm: v3(take(3)),
                    alpha: take(1)[0],
                    v_d: v3(take(3)),
                    x_d: v3(take(3)),
                    ee_position: v3(take(3)),
                    ee_orientation: q4(take(4)),
                    ee_velocity: v3(take(3)),
                    q: take(r.dof),
                    dq: take(r.dof),
                    command: take(r.dof),
                });
            }
            let link_forces = (0..log.meta.links).map(|_| v3(take(3))).collect();
            log.ticks.push(TickRecord {
                t,
                human_position,
                human_orientation,
                v_h,
                object_position,
                object_orientation,
                robots,
                link_forces,
            });
        }
        Ok(log)
    }

    pub fn sidecar(&self, config: Option<&ScenarioConfig>) -> serde_json::Value {
        let summary: Vec<serde_json::Value> = (0..self.meta.robots.len())
            .map(|i| {
                let n = self.ticks.len().max(1) as f64;
                let alpha: f64 = self.ticks.iter().map(|k| k.robots[i].alpha).sum::<f64>() / n;
                let force: f64 = self.ticks.iter().map(|k| k.robots[i].force.norm()).sum::<f64>() / n;
                serde_json::json!({
                    "robot": self.meta.robots[i].name,
                    "mean_alpha": alpha,
                    "mean_force": force,
                })
            })
            .collect();
        serde_json::json!({
            "format_version": LOG_FORMAT_VERSION,
            "meta": self.meta,
            "status": self.status,
            "records": self.ticks.len(),
            "digest": self.digest(),
            "summary": summary,
            "wall_time_s": self.wall_time,
            "real_time_factor": self.real_time_factor(),
            "config": config,
        })
    }

    /// Writes `<name>.csv` and the `<name>.json` sidecar into `dir`.
    pub fn write(&self, dir: &Path, config: Option<&ScenarioConfig>) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let csv_path = dir.join(format!("{}.csv", self.meta.name));
        let json_path = dir.join(format!("{}.json", self.meta.name));
        std::fs::write(&csv_path, self.to_csv_string()).map_err(|e| Error::io(&csv_path, e))?;
        let json = serde_json::to_string_pretty(&self.sidecar(config)).expect("json");
        std::fs::write(&json_path, json).map_err(|e| Error::io(&json_path, e))?;
        Ok((csv_path, json_path))
    }

    /// Reads a log written by [`RunLog::write`]; the sidecar must sit next to
    /// the CSV.
    pub fn load(csv_path: &Path) -> Result<Self> {
        let json_path = csv_path.with_extension("json");
        let json = std::fs::read_to_string(&json_path).map_err(|e| Error::io(&json_path, e))?;
        let value: serde_json::Value = serde_json::from_str(&json).map_err(|e| Error::Parse {
            path: json_path.clone(),
            message: e.to_string(),
        })?;
        let meta: RunMeta = serde_json::from_value(value["meta"].clone()).map_err(|e| Error::Parse {
            path: json_path.clone(),
            message: e.to_string(),
        })?;
        let status: RunStatus = serde_json::from_value(value["status"].clone()).unwrap_or(RunStatus::Complete);
        let text = std::fs::read_to_string(csv_path).map_err(|e| Error::io(csv_path, e))?;
        let mut log = Self::from_csv_str(&text, meta, csv_path)?;
        log.status = status;
        Ok(log)
    }
}
