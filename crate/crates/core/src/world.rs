//! Physical world around the robots: a 6-DoF rigid object, the kinematic
//! human hand, and the links that couple every agent to the object.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{Matrix3, Translation3, UnitQuaternion, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{renormalized, Pose};
use crate::metrics::{Axis, SegmentSpec};

/// Below this separation a link has no defined direction.
pub const COINCIDENT_DISTANCE: f64 = 1e-9;
pub const DEFAULT_STRAP_STIFFNESS: f64 = 2000.0;
pub const DEFAULT_STRAP_DAMPING: f64 = 50.0;
pub const DEFAULT_RIGID_STIFFNESS: f64 = 1e5;
pub const DEFAULT_RIGID_DAMPING: f64 = 2000.0;

pub const TRAJECTORY_HEADER: [&str; 11] = ["t", "px", "py", "pz", "qw", "qx", "qy", "qz", "vx", "vy", "vz"];

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectBody {
    pub mass: f64,
    /// Rotational inertia about the center of mass, body frame.
    pub inertia: Matrix3<f64>,
    /// Pose of the center of mass.
    pub pose: Pose,
    pub linear_velocity: Vector3<f64>,
    /// World frame.
    pub angular_velocity: Vector3<f64>,
    /// Body-frame attachment points.
    pub attachments: Vec<Vector3<f64>>,
    pub linear_damping: f64,
    pub angular_damping: f64,
}

impl ObjectBody {
    pub fn new(mass: f64, inertia: Matrix3<f64>, pose: Pose, attachments: Vec<Vector3<f64>>) -> Self {
        Self {
            mass,
            inertia,
            pose,
            linear_velocity: Vector3::zeros(),
            angular_velocity: Vector3::zeros(),
            attachments,
            linear_damping: 0.0,
            angular_damping: 0.0,
        }
    }

    /// Solid cuboid of uniform density.
    pub fn box_inertia(mass: f64, size: [f64; 3]) -> Matrix3<f64> {
        let [a, b, c] = size.map(|s| s * s);
        Matrix3::from_diagonal(&Vector3::new(b + c, a + c, a + b)) * (mass / 12.0)
    }

    pub fn validate(&self, locator: &str) -> Result<()> {
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(Error::config(format!("{locator}.mass"), "must be > 0"));
        }
        let sym = (self.inertia - self.inertia.transpose()).norm();
        if sym > 1e-9 || self.inertia.cholesky().is_none() {
            return Err(Error::config(format!("{locator}.inertia"), "must be symmetric positive definite"));
        }
        if (self.pose.rotation.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::config(format!("{locator}.orientation"), "quaternion must be unit-norm"));
        }
        if self.linear_damping < 0.0 || self.angular_damping < 0.0 {
            return Err(Error::config(format!("{locator}.damping"), "must be >= 0"));
        }
        Ok(())
    }

    pub fn attachment_position(&self, i: usize) -> Vector3<f64> {
        (self.pose * nalgebra::Point3::from(self.attachments[i])).coords
    }

    pub fn attachment_velocity(&self, i: usize) -> Vector3<f64> {
        let r = self.pose.rotation * self.attachments[i];
        self.linear_velocity + self.angular_velocity.cross(&r)
    }

    pub fn inertia_world(&self) -> Matrix3<f64> {
        let r = self.pose.rotation.to_rotation_matrix();
        r.matrix() * self.inertia * r.matrix().transpose()
    }

    pub fn kinetic_energy(&self) -> f64 {
        0.5 * self.mass * self.linear_velocity.norm_squared()
            + 0.5 * self.angular_velocity.dot(&(self.inertia_world() * self.angular_velocity))
    }

    pub fn linear_momentum(&self) -> Vector3<f64> {
        self.linear_velocity * self.mass
    }

    pub fn angular_momentum(&self) -> Vector3<f64> {
        self.inertia_world() * self.angular_velocity
    }
}

/// One semi-implicit Euler step of the Newton–Euler equations. `forces`
/// holds world-frame point forces as `(point, force)` pairs.
pub fn step_object(object: &mut ObjectBody, forces: &[(Vector3<f64>, Vector3<f64>)], gravity: f64, dt: f64) {
    let c = object.pose.translation.vector;
    let mut f = Vector3::new(0.0, 0.0, -gravity * object.mass);
    let mut tau = Vector3::zeros();
    for (p, force) in forces {
        f += force;
        tau += (p - c).cross(force);
    }
    f -= object.linear_velocity * object.linear_damping;
    tau -= object.angular_velocity * object.angular_damping;

    object.linear_velocity += f * (dt / object.mass);
    let i_w = object.inertia_world();
    let w = object.angular_velocity;
    let rhs = tau - w.cross(&(i_w * w));
    let dw = i_w.cholesky().map(|ch| ch.solve(&rhs)).unwrap_or_else(Vector3::zeros);
    object.angular_velocity += dw * dt;

    object.pose.translation.vector += object.linear_velocity * dt;
    let rot = UnitQuaternion::from_scaled_axis(object.angular_velocity * dt) * object.pose.rotation;
    object.pose.rotation = renormalized(&rot);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkKind {
    Rigid,
    Strap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Agent {
    Human,
    Robot(usize),
}

impl std::fmt::Display for Agent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Agent::Human => write!(f, "human"),
            Agent::Robot(i) => write!(f, "robot {i}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingLink {
    pub kind: LinkKind,
    pub agent: Agent,
    /// Index into the object's attachment list.
    pub attachment: usize,
    /// Point on the human expressed in the hand frame. Unused for robots,
    /// whose link starts at the tool point.
    pub agent_offset: Vector3<f64>,
    pub rest_length: f64,
    pub stiffness: f64,
    pub damping: f64,
}

impl CouplingLink {
    pub fn strap(agent: Agent, attachment: usize, rest_length: f64) -> Self {
        Self {
            kind: LinkKind::Strap,
            agent,
            attachment,
            agent_offset: Vector3::zeros(),
            rest_length,
            stiffness: DEFAULT_STRAP_STIFFNESS,
            damping: DEFAULT_STRAP_DAMPING,
        }
    }

    pub fn rigid(agent: Agent, attachment: usize) -> Self {
        Self {
            kind: LinkKind::Rigid,
            agent,
            attachment,
            agent_offset: Vector3::zeros(),
            rest_length: 0.0,
            stiffness: DEFAULT_RIGID_STIFFNESS,
            damping: DEFAULT_RIGID_DAMPING,
        }
    }

    pub fn with_offset(mut self, offset: Vector3<f64>) -> Self {
        self.agent_offset = offset;
        self
    }

    pub fn with_gains(mut self, stiffness: f64, damping: f64) -> Self {
        self.stiffness = stiffness;
        self.damping = damping;
        self
    }

    pub fn validate(&self, locator: &str, attachments: usize) -> Result<()> {
        if !(self.stiffness >= 0.0) || !self.stiffness.is_finite() {
            return Err(Error::config(format!("{locator}.stiffness"), "must be >= 0"));
        }
        if !(self.damping >= 0.0) || !self.damping.is_finite() {
            return Err(Error::config(format!("{locator}.damping"), "must be >= 0"));
        }
        if self.kind == LinkKind::Strap && !(self.rest_length >= 0.0) {
            return Err(Error::config(format!("{locator}.rest_length"), "must be >= 0"));
        }
        if self.attachment >= attachments {
            return Err(Error::config(
                format!("{locator}.attachment"),
                format!("index {} out of range ({} attachments)", self.attachment, attachments),
            ));
        }
        Ok(())
    }
}

/// Position and velocity of one end of a link.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EndPoint {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
}

/// Force exerted by the link on its agent; the object receives the negation.
pub fn link_force(link: &CouplingLink, agent: &EndPoint, object: &EndPoint) -> Vector3<f64> {
    let d = object.position - agent.position;
    let dv = object.velocity - agent.velocity;
    match link.kind {
        LinkKind::Rigid => d * link.stiffness + dv * link.damping,
        LinkKind::Strap => {
            let dist = d.norm();
            if dist < COINCIDENT_DISTANCE {
                log::warn!("strap endpoints coincide; no force direction");
                return Vector3::zeros();
            }
            let n = d / dist;
            let stretch = dist - link.rest_length;
            if stretch <= 0.0 {
                return Vector3::zeros();
            }
            let tension = (link.stiffness * stretch + link.damping * n.dot(&dv)).max(0.0);
            n * tension
        }
    }
}

/// Axial tension of a link force, positive when pulling the agent toward
/// the object.
pub fn axial_tension(agent: &EndPoint, object: &EndPoint, force: &Vector3<f64>) -> f64 {
    let d = object.position - agent.position;
    let dist = d.norm();
    if dist < COINCIDENT_DISTANCE {
        0.0
    } else {
        force.dot(&(d / dist))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HumanSample {
    pub t: f64,
    pub pose: Pose,
    pub velocity: Vector3<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HumanState {
    pub pose: Pose,
    pub velocity: Vector3<f64>,
    pub angular_velocity: Vector3<f64>,
    /// The query time fell outside the recorded span.
    pub clamped: bool,
}

impl HumanState {
    /// World position and velocity of a point given in the hand frame.
    pub fn point(&self, offset: &Vector3<f64>) -> EndPoint {
        let r = self.pose.rotation * offset;
        EndPoint {
            position: self.pose.translation.vector + r,
            velocity: self.velocity + self.angular_velocity.cross(&r),
        }
    }
}

/// Recorded hand motion, interpolated with cubic Hermite splines on
/// position and slerp on orientation.
#[derive(Debug, Clone, PartialEq)]
pub struct HumanTrajectory {
    samples: Vec<HumanSample>,
}

/// Relative RMS tolerance between recorded velocity and the position
/// derivative.
pub const VELOCITY_CONSISTENCY: f64 = 0.05;

impl HumanTrajectory {
    pub fn new(samples: Vec<HumanSample>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Input("human trajectory has no samples".into()));
        }
        for (i, w) in samples.windows(2).enumerate() {
            if !(w[1].t > w[0].t) {
                return Err(Error::Input(format!(
                    "human trajectory timestamps must increase strictly (row {})",
                    i + 1
                )));
            }
        }
        for (i, s) in samples.iter().enumerate() {
            let finite = s.t.is_finite()
                && s.pose.translation.vector.iter().all(|v| v.is_finite())
                && s.velocity.iter().all(|v| v.is_finite());
            if !finite {
                return Err(Error::Input(format!("non-finite value in human trajectory row {i}")));
            }
        }
        let traj = Self { samples };
        traj.check_velocity_consistency()?;
        Ok(traj)
    }

    pub fn stationary(pose: Pose) -> Self {
        Self {
            samples: vec![HumanSample {
                t: 0.0,
                pose,
                velocity: Vector3::zeros(),
            }],
        }
    }

    fn check_velocity_consistency(&self) -> Result<()> {
        let s = &self.samples;
        if s.len() < 2 {
            return Ok(());
        }
        let n = s.len();
        let mut err2 = 0.0;
        let mut ref2 = 0.0;
        for i in 0..n {
            let (a, b) = if i == 0 {
                (0, 1)
            } else if i == n - 1 {
                (n - 2, n - 1)
            } else {
                (i - 1, i + 1)
            };
            let fd = (s[b].pose.translation.vector - s[a].pose.translation.vector) / (s[b].t - s[a].t);
            err2 += (s[i].velocity - fd).norm_squared();
            ref2 += fd.norm_squared();
        }
        let err = (err2 / n as f64).sqrt();
        let reference = (ref2 / n as f64).sqrt();
        if err > VELOCITY_CONSISTENCY * reference + 1e-9 {
            return Err(Error::Input(format!(
                "human trajectory velocity disagrees with position derivative: RMS error {err:.4} m/s vs RMS speed {reference:.4} m/s"
            )));
        }
        Ok(())
    }

    pub fn samples(&self) -> &[HumanSample] {
        &self.samples
    }

    pub fn span(&self) -> (f64, f64) {
        (self.samples[0].t, self.samples[self.samples.len() - 1].t)
    }

    pub fn sample(&self, t: f64) -> HumanState {
        let s = &self.samples;
        let (t0, t1) = self.span();
        if s.len() == 1 || t < t0 || t > t1 {
            let end = if t < t0 || s.len() == 1 { &s[0] } else { &s[s.len() - 1] };
            return HumanState {
                pose: end.pose,
                velocity: Vector3::zeros(),
                angular_velocity: Vector3::zeros(),
                clamped: s.len() > 1,
            };
        }
        // index of the interval [t_i, t_{i+1}] containing t
        let i = match s.binary_search_by(|x| x.t.total_cmp(&t)) {
            Ok(i) => {
                let k = &s[i];
                let w = if i + 1 < s.len() {
                    interval_angular_velocity(k, &s[i + 1])
                } else {
                    interval_angular_velocity(&s[i - 1], k)
                };
                return HumanState {
                    pose: k.pose,
                    velocity: k.velocity,
                    angular_velocity: w,
                    clamped: false,
                };
            }
            Err(i) => i - 1,
        };
        let (a, b) = (&s[i], &s[i + 1]);
        let h = b.t - a.t;
        let u = (t - a.t) / h;
        let (p0, p1) = (a.pose.translation.vector, b.pose.translation.vector);
        let (m0, m1) = (a.velocity * h, b.velocity * h);
        let u2 = u * u;
        let u3 = u2 * u;
        let pos = p0 * (2.0 * u3 - 3.0 * u2 + 1.0)
            + m0 * (u3 - 2.0 * u2 + u)
            + p1 * (-2.0 * u3 + 3.0 * u2)
            + m1 * (u3 - u2);
        let vel = (p0 * (6.0 * u2 - 6.0 * u)
            + m0 * (3.0 * u2 - 4.0 * u + 1.0)
            + p1 * (-6.0 * u2 + 6.0 * u)
            + m1 * (3.0 * u2 - 2.0 * u))
            / h;
        let rot = a.pose.rotation.slerp(&b.pose.rotation, u);
        HumanState {
            pose: Pose::from_parts(Translation3::from(pos), rot),
            velocity: vel,
            angular_velocity: interval_angular_velocity(a, b),
            clamped: false,
        }
    }

    pub fn from_csv_reader(reader: impl Read, origin: &Path) -> Result<Self> {
        let parse_err = |message: String| Error::Parse {
            path: origin.to_path_buf(),
            message,
        };
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header = rdr.headers().map_err(|e| parse_err(e.to_string()))?.clone();
        let names: Vec<&str> = header.iter().collect();
        if names != TRAJECTORY_HEADER {
            return Err(parse_err(format!(
                "expected header `{}`, found `{}`",
                TRAJECTORY_HEADER.join(","),
                names.join(",")
            )));
        }
        let mut samples = Vec::new();
        for (row, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| parse_err(e.to_string()))?;
            let mut v = [0.0; 11];
            for (k, field) in record.iter().enumerate() {
                v[k] = field
                    .parse()
                    .map_err(|_| parse_err(format!("row {}: column {} is not a number", row + 1, TRAJECTORY_HEADER[k])))?;
            }
            let q: nalgebra::Quaternion<f64> = nalgebra::Quaternion::new(v[4], v[5], v[6], v[7]);
            if (q.norm() - 1.0).abs() > 1e-6 {
                return Err(parse_err(format!("row {}: orientation quaternion is not unit-norm", row + 1)));
            }
            samples.push(HumanSample {
                t: v[0],
                pose: Pose::from_parts(
                    Translation3::new(v[1], v[2], v[3]),
                    UnitQuaternion::from_quaternion(q),
                ),
                velocity: Vector3::new(v[8], v[9], v[10]),
            });
        }
        Self::new(samples).map_err(|e| match e {
            Error::Input(m) => parse_err(m),
            other => other,
        })
    }

    pub fn from_csv_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_reader(std::io::BufReader::new(file), path)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = TRAJECTORY_HEADER.join(",");
        out.push('\n');
        for s in &self.samples {
            let p = s.pose.translation.vector;
            let q = s.pose.rotation.quaternion();
            let v = s.velocity;
            let row = [s.t, p.x, p.y, p.z, q.w, q.i, q.j, q.k, v.x, v.y, v.z];
            let fields: Vec<String> = row.iter().map(|x| format!("{x}")).collect();
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(self.to_csv_string().as_bytes()).map_err(|e| Error::io(path, e))
    }
}

fn interval_angular_velocity(a: &HumanSample, b: &HumanSample) -> Vector3<f64> {
    let delta = b.pose.rotation * a.pose.rotation.inverse();
    delta.scaled_axis() / (b.t - a.t)
}

/// Hand state at `t`; see [`HumanTrajectory::sample`].
pub fn sample_human(traj: &HumanTrajectory, t: f64) -> HumanState {
    traj.sample(t)
}

/// One straight-line sub-movement with a minimum-jerk time law. A zero
/// displacement is a rest.
#[derive(Debug, Clone, PartialEq)]
pub struct Motion {
    pub displacement: Vector3<f64>,
    pub duration: f64,
}

impl Motion {
    pub fn rest(duration: f64) -> Self {
        Self {
            displacement: Vector3::zeros(),
            duration,
        }
    }

    pub fn straight(displacement: Vector3<f64>, duration: f64) -> Self {
        Self { displacement, duration }
    }
}

/// Samples a chain of minimum-jerk motions at `rate` Hz with a fixed hand
/// orientation.
pub fn min_jerk_path(start: &Pose, motions: &[Motion], rate: f64) -> Result<HumanTrajectory> {
    if !(rate > 0.0) || motions.iter().any(|m| !(m.duration > 0.0)) {
        return Err(Error::Input("path rate and motion durations must be positive".into()));
    }
    let total: f64 = motions.iter().map(|m| m.duration).sum();
    let n = (total * rate).round() as usize;
    let mut samples = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let t = k as f64 / rate;
        let mut origin = start.translation.vector;
        let mut t0 = 0.0;
        let mut velocity = Vector3::zeros();
        let mut pos = origin;
        for (idx, m) in motions.iter().enumerate() {
            let last = idx + 1 == motions.len();
            if t < t0 + m.duration || last {
                let s = ((t - t0) / m.duration).clamp(0.0, 1.0);
                let shape = 10.0 * s.powi(3) - 15.0 * s.powi(4) + 6.0 * s.powi(5);
                let rate_shape = (30.0 * s.powi(2) - 60.0 * s.powi(3) + 30.0 * s.powi(4)) / m.duration;
                pos = origin + m.displacement * shape;
                velocity = m.displacement * rate_shape;
                break;
            }
            origin += m.displacement;
            t0 += m.duration;
        }
        samples.push(HumanSample {
            t,
            pose: Pose::from_parts(Translation3::from(pos), start.rotation),
            velocity,
        });
    }
    HumanTrajectory::new(samples)
}

/// Schedule of the co-carrying path: a rest, 1.2 m backwards (+x, away from
/// the robots), 0.8 m sideways (+y), then 0.2 m down and back up, with rests
/// in between.
pub struct CarryPath;

impl CarryPath {
    pub const BACKWARDS: f64 = 1.2;
    pub const SIDEWAYS: f64 = 0.8;
    pub const DOWN_UP: f64 = 0.2;
    pub const DURATION: f64 = 60.0;

    pub fn motions() -> Vec<Motion> {
        vec![
            Motion::rest(4.0),
            Motion::straight(Vector3::new(Self::BACKWARDS, 0.0, 0.0), 14.0),
            Motion::rest(6.0),
            Motion::straight(Vector3::new(0.0, Self::SIDEWAYS, 0.0), 11.0),
            Motion::rest(6.0),
            Motion::straight(Vector3::new(0.0, 0.0, -Self::DOWN_UP), 4.0),
            Motion::rest(2.0),
            Motion::straight(Vector3::new(0.0, 0.0, Self::DOWN_UP), 4.0),
            Motion::rest(9.0),
        ]
    }

    pub fn segments() -> Vec<SegmentSpec> {
        vec![
            SegmentSpec::new("backwards", 4.0, 18.0, Axis::X),
            SegmentSpec::new("sideways", 24.0, 35.0, Axis::Y),
            SegmentSpec::new("down-up", 41.0, 51.0, Axis::Z),
        ]
    }

    pub fn trajectory(start: &Pose, rate: f64) -> Result<HumanTrajectory> {
        min_jerk_path(start, &Self::motions(), rate)
    }
}

/// Force/torque sensor model at a robot flange: world-frame link force
/// minus the tare captured at rest, plus optional white Gaussian noise.
#[derive(Debug, Clone)]
pub struct ForceSensor {
    pub noise_std: f64,
    pub tare: Vector3<f64>,
    noise: Option<(Normal<f64>, ChaCha8Rng)>,
}

impl ForceSensor {
    /// `stream` separates the noise sequences of different robots drawn
    /// from the same seed.
    pub fn new(noise_std: f64, seed: u64, stream: u64) -> Result<Self> {
        if !(noise_std >= 0.0) || !noise_std.is_finite() {
            return Err(Error::Input(format!("noise standard deviation {noise_std} must be >= 0")));
        }
        let noise = if noise_std > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream);
            Some((Normal::new(0.0, noise_std).expect("valid std"), rng))
        } else {
            None
        };
        Ok(Self {
            noise_std,
            tare: Vector3::zeros(),
            noise,
        })
    }

    pub fn set_tare(&mut self, raw: Vector3<f64>) {
        self.tare = raw;
    }

    pub fn measure(&mut self, raw: &Vector3<f64>) -> Vector3<f64> {
        let mut f = raw - self.tare;
        if let Some((dist, rng)) = &mut self.noise {
            for k in 0..3 {
                f[k] += dist.sample(rng);
            }
        }
        f
    }
}

/// `F_H` delivered to a robot's interface; see [`ForceSensor::measure`].
pub fn measure_end_effector_force(sensor: &mut ForceSensor, link_force_on_robot: &Vector3<f64>) -> Vector3<f64> {
    sensor.measure(link_force_on_robot)
}

/// Object, human and links. Robot states are owned by the simulation and
/// enter through their tool points.
#[derive(Debug, Clone)]
pub struct World {
    pub object: ObjectBody,
    pub links: Vec<CouplingLink>,
    pub human: HumanTrajectory,
    pub gravity: f64,
}

impl World {
    pub fn robot_link(&self, robot: usize) -> Option<usize> {
        self.links.iter().position(|l| l.agent == Agent::Robot(robot))
    }

    /// Agent-side end point of a link.
    pub fn agent_point(&self, link: &CouplingLink, human: &HumanState, robots: &[EndPoint]) -> EndPoint {
        match link.agent {
            Agent::Human => human.point(&link.agent_offset),
            Agent::Robot(i) => robots[i],
        }
    }

    pub fn object_point(&self, link: &CouplingLink) -> EndPoint {
        EndPoint {
            position: self.object.attachment_position(link.attachment),
            velocity: self.object.attachment_velocity(link.attachment),
        }
    }

    /// Force on each link's agent at time `t`.
    pub fn link_forces(&self, t: f64, robots: &[EndPoint]) -> Vec<Vector3<f64>> {
        let human = self.human.sample(t);
        self.links
            .iter()
            .map(|l| link_force(l, &self.agent_point(l, &human, robots), &self.object_point(l)))
            .collect()
    }

    /// Applies the reaction of every link force to the object and advances it.
    pub fn step_object(&mut self, forces_on_agents: &[Vector3<f64>], dt: f64) {
        let applied: Vec<_> = self
            .links
            .iter()
            .zip(forces_on_agents)
            .map(|(l, f)| (self.object.attachment_position(l.attachment), -f))
            .collect();
        step_object(&mut self.object, &applied, self.gravity, dt);
    }
}
