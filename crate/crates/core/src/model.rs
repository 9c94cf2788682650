//! Mobile-manipulator model: a 3-DoF planar omni-directional base carrying a
//! serial revolute arm described with standard Denavit-Hartenberg parameters.
//!
//! Generalized coordinates are ordered `[x, y, yaw, q_arm...]`. The whole-body
//! dynamics are block-decoupled: the base obeys the virtual model
//! `M_b q̈_b + D_b q̇_b = τ_b + τ_b,ext` and the arm obeys its rigid-body
//! dynamics with the arm root treated as an inertial frame.

use std::path::Path;

use nalgebra::{
    DMatrix, DVector, Isometry3, Matrix3, Translation3, UnitQuaternion, Vector3,
};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::math::{twist, Pose};

/// Base DoF: planar x, y and yaw.
pub const BASE_DOF: usize = 3;

pub const STANDARD_GRAVITY: f64 = 9.81;

/// Model file schema version understood by this crate.
pub const MODEL_FILE_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DhJoint {
    pub a: f64,
    pub d: f64,
    pub alpha: f64,
    pub theta_offset: f64,
}

impl DhJoint {
    /// Transform from the previous frame to this joint's frame at angle `q`.
    pub fn transform(&self, q: f64) -> Isometry3<f64> {
        let rot_z = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), q + self.theta_offset);
        let rot_x = UnitQuaternion::from_axis_angle(&Vector3::x_axis(), self.alpha);
        Isometry3::from_parts(Translation3::new(0.0, 0.0, self.d), rot_z)
            * Isometry3::from_parts(Translation3::new(self.a, 0.0, 0.0), rot_x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkInertia {
    pub mass: f64,
    /// Center of mass in the link frame.
    pub com: Vector3<f64>,
    /// Rotational inertia about the center of mass, link frame axes.
    pub inertia: Matrix3<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmModel {
    pub joints: Vec<DhJoint>,
    pub links: Vec<LinkInertia>,
    pub q_home: DVector<f64>,
    /// Last DH frame to the end-effector point.
    pub tool: Isometry3<f64>,
}

impl ArmModel {
    pub fn dof(&self) -> usize {
        self.joints.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaseModel {
    pub virtual_inertia: Vector3<f64>,
    pub virtual_damping: Vector3<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobotModel {
    pub name: String,
    pub base: BaseModel,
    pub arm: ArmModel,
    /// Base frame to arm root frame.
    pub mount: Isometry3<f64>,
    pub gravity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WholeBodyState {
    pub q: DVector<f64>,
    pub dq: DVector<f64>,
}

impl WholeBodyState {
    pub fn new(q: DVector<f64>, dq: DVector<f64>) -> Result<Self> {
        check_len("WholeBodyState dq", q.len(), dq.len())?;
        Ok(Self { q, dq })
    }

    pub fn at_rest(q: DVector<f64>) -> Self {
        let n = q.len();
        Self {
            q,
            dq: DVector::zeros(n),
        }
    }

    pub fn base(&self) -> Vector3<f64> {
        Vector3::new(self.q[0], self.q[1], self.q[2])
    }
}

/// Arm kinematics expressed in the arm root frame.
#[derive(Debug, Clone)]
pub struct ArmKinematics {
    /// Link frames `T_0 .. T_{n-1}` (frame `i` is attached to link `i`).
    pub frames: Vec<Isometry3<f64>>,
    /// Unit axis of joint `i`.
    pub axes: Vec<Vector3<f64>>,
    /// A point on the axis of joint `i` (origin of the preceding frame).
    pub origins: Vec<Vector3<f64>>,
    /// End-effector frame.
    pub ee: Isometry3<f64>,
}

impl RobotModel {
    pub fn dof(&self) -> usize {
        BASE_DOF + self.arm.dof()
    }

    pub fn arm_dof(&self) -> usize {
        self.arm.dof()
    }

    /// Default whole-body configuration with the base at `base = (x, y, yaw)`.
    pub fn home(&self, base: Vector3<f64>) -> DVector<f64> {
        let mut q = DVector::zeros(self.dof());
        q.fixed_rows_mut::<3>(0).copy_from(&base);
        q.rows_mut(BASE_DOF, self.arm_dof()).copy_from(&self.arm.q_home);
        q
    }

    fn check_q(&self, q: &DVector<f64>) -> Result<()> {
        check_len("generalized coordinates", self.dof(), q.len())
    }

    pub fn base_transform(&self, q: &DVector<f64>) -> Isometry3<f64> {
        Isometry3::from_parts(
            Translation3::new(q[0], q[1], 0.0),
            UnitQuaternion::from_axis_angle(&Vector3::z_axis(), q[2]),
        )
    }

    /// World transform of the arm root frame.
    pub fn arm_root(&self, q: &DVector<f64>) -> Isometry3<f64> {
        self.base_transform(q) * self.mount
    }

    pub fn arm_kinematics(&self, q_arm: &[f64]) -> ArmKinematics {
        let n = self.arm.dof();
        let mut frames = Vec::with_capacity(n);
        let mut axes = Vec::with_capacity(n);
        let mut origins = Vec::with_capacity(n);
        let mut t = Isometry3::identity();
        for (joint, &qi) in self.arm.joints.iter().zip(q_arm) {
            axes.push(t.rotation * Vector3::z());
            origins.push(t.translation.vector);
            t *= joint.transform(qi);
            frames.push(t);
        }
        let ee = t * self.arm.tool;
        ArmKinematics {
            frames,
            axes,
            origins,
            ee,
        }
    }

    /// End-effector pose in the world frame.
    pub fn forward_kinematics(&self, q: &DVector<f64>) -> Result<Pose> {
        self.check_q(q)?;
        let kin = self.arm_kinematics(&q.as_slice()[BASE_DOF..]);
        let mut pose = self.arm_root(q) * kin.ee;
        pose.rotation = UnitQuaternion::from_quaternion(*pose.rotation.quaternion());
        Ok(pose)
    }

    /// Whole-body geometric Jacobian (6 x n), world frame, linear rows first.
    pub fn whole_body_jacobian(&self, q: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_q(q)?;
        let n = self.dof();
        let root = self.arm_root(q);
        let kin = self.arm_kinematics(&q.as_slice()[BASE_DOF..]);
        let p_ee = (root * kin.ee).translation.vector;
        let p_base = Vector3::new(q[0], q[1], 0.0);

        let mut j = DMatrix::zeros(6, n);
        j[(0, 0)] = 1.0;
        j[(1, 1)] = 1.0;
        let yaw_lin = Vector3::z().cross(&(p_ee - p_base));
        j.fixed_view_mut::<6, 1>(0, 2)
            .copy_from(&twist(yaw_lin, Vector3::z()));
        for i in 0..self.arm_dof() {
            let axis = root.rotation * kin.axes[i];
            let origin = root * nalgebra::Point3::from(kin.origins[i]);
            let lin = axis.cross(&(p_ee - origin.coords));
            j.fixed_view_mut::<6, 1>(0, BASE_DOF + i)
                .copy_from(&twist(lin, axis));
        }
        Ok(j)
    }

    /// Arm-only columns of the whole-body Jacobian.
    pub fn arm_jacobian(&self, q: &DVector<f64>) -> Result<DMatrix<f64>> {
        let j = self.whole_body_jacobian(q)?;
        Ok(j.columns(BASE_DOF, self.arm_dof()).into_owned())
    }

    /// Gravity vector expressed in the arm root frame. The base is planar, so
    /// only the mount rotation matters.
    pub fn gravity_in_root(&self) -> Vector3<f64> {
        self.mount.rotation.inverse() * Vector3::new(0.0, 0.0, -self.gravity)
    }

    /// Per-link centers of mass and inertia tensors in the arm root frame.
    fn link_mass_properties(&self, kin: &ArmKinematics) -> Vec<(f64, Vector3<f64>, Matrix3<f64>)> {
        kin.frames
            .iter()
            .zip(&self.arm.links)
            .map(|(frame, link)| {
                let r = frame.rotation.to_rotation_matrix();
                let com = frame * nalgebra::Point3::from(link.com);
                (link.mass, com.coords, r.matrix() * link.inertia * r.matrix().transpose())
            })
            .collect()
    }

    /// Arm inertia matrix via the composite-rigid-body algorithm.
    pub fn arm_mass_matrix(&self, q_arm: &[f64]) -> DMatrix<f64> {
        let n = self.arm_dof();
        let kin = self.arm_kinematics(q_arm);
        let props = self.link_mass_properties(&kin);
        let mut m = DMatrix::zeros(n, n);

        // composite body of links j..n-1: mass, com, inertia about com
        let mut c_mass = 0.0;
        let mut c_com = Vector3::zeros();
        let mut c_inertia = Matrix3::zeros();
        for j in (0..n).rev() {
            let (mj, cj, ij) = props[j];
            let new_mass = c_mass + mj;
            let new_com = (c_com * c_mass + cj * mj) / new_mass;
            c_inertia = shift_inertia(&c_inertia, c_mass, &(c_com - new_com))
                + shift_inertia(&ij, mj, &(cj - new_com));
            c_mass = new_mass;
            c_com = new_com;

            let zj = kin.axes[j];
            let force = c_mass * zj.cross(&(c_com - kin.origins[j]));
            let moment_com = c_inertia * zj;
            for i in 0..=j {
                let moment = moment_com + (c_com - kin.origins[i]).cross(&force);
                let v = kin.axes[i].dot(&moment);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    /// Recursive Newton-Euler inverse dynamics of the arm.
    ///
    /// Returns `M_a q̈ + C_a q̇ + g_a` (gravity included when `with_gravity`).
    pub fn arm_inverse_dynamics(
        &self,
        q_arm: &[f64],
        dq_arm: &[f64],
        ddq_arm: &[f64],
        with_gravity: bool,
    ) -> DVector<f64> {
        let n = self.arm_dof();
        let kin = self.arm_kinematics(q_arm);
        let props = self.link_mass_properties(&kin);

        let mut omega = vec![Vector3::zeros(); n];
        let mut alpha = vec![Vector3::zeros(); n];
        let mut acc_origin = vec![Vector3::zeros(); n];
        let mut acc_com = vec![Vector3::zeros(); n];

        let root_acc = if with_gravity {
            -self.gravity_in_root()
        } else {
            Vector3::zeros()
        };

        let mut prev_omega = Vector3::zeros();
        let mut prev_alpha = Vector3::zeros();
        let mut prev_acc = root_acc;
        let mut prev_origin = Vector3::zeros();
        for i in 0..n {
            let z = kin.axes[i];
            let o = kin.origins[i];
            let r = o - prev_origin;
            acc_origin[i] =
                prev_acc + prev_alpha.cross(&r) + prev_omega.cross(&prev_omega.cross(&r));
            omega[i] = prev_omega + z * dq_arm[i];
            alpha[i] = prev_alpha + z * ddq_arm[i] + prev_omega.cross(&(z * dq_arm[i]));
            let rc = props[i].1 - o;
            acc_com[i] = acc_origin[i] + alpha[i].cross(&rc) + omega[i].cross(&omega[i].cross(&rc));

            prev_omega = omega[i];
            prev_alpha = alpha[i];
            prev_acc = acc_origin[i];
            prev_origin = o;
        }

        let mut tau = DVector::zeros(n);
        let mut f_next = Vector3::zeros();
        let mut n_next = Vector3::zeros();
        for i in (0..n).rev() {
            let (m, c, inertia) = props[i];
            let o = kin.origins[i];
            let f_link = m * acc_com[i];
            let n_link = inertia * alpha[i] + omega[i].cross(&(inertia * omega[i]));
            let next_origin = if i + 1 < n { kin.origins[i + 1] } else { o };
            let f = f_link + f_next;
            let moment = n_link + (c - o).cross(&f_link) + n_next + (next_origin - o).cross(&f_next);
            tau[i] = kin.axes[i].dot(&moment);
            f_next = f;
            n_next = moment;
        }
        tau
    }

    /// Whole-body inertia: `diag(M_b, M_a(q_a))`.
    pub fn mass_matrix(&self, q: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_q(q)?;
        let n = self.dof();
        let na = self.arm_dof();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..BASE_DOF {
            m[(i, i)] = self.base.virtual_inertia[i];
        }
        m.view_mut((BASE_DOF, BASE_DOF), (na, na))
            .copy_from(&self.arm_mass_matrix(&q.as_slice()[BASE_DOF..]));
        Ok(m)
    }

    /// Returns `(C q̇, g)`. Base rows: `D_b q̇_b` and zero gravity.
    pub fn bias_terms(
        &self,
        q: &DVector<f64>,
        dq: &DVector<f64>,
    ) -> Result<(DVector<f64>, DVector<f64>)> {
        self.check_q(q)?;
        check_len("generalized velocities", self.dof(), dq.len())?;
        let n = self.dof();
        let na = self.arm_dof();
        let qa = &q.as_slice()[BASE_DOF..];
        let dqa = &dq.as_slice()[BASE_DOF..];
        let zeros = vec![0.0; na];
        let g_a = self.arm_inverse_dynamics(qa, &zeros, &zeros, true);
        let c_a = self.arm_inverse_dynamics(qa, dqa, &zeros, false);

        let mut c = DVector::zeros(n);
        let mut g = DVector::zeros(n);
        for i in 0..BASE_DOF {
            c[i] = self.base.virtual_damping[i] * dq[i];
        }
        c.rows_mut(BASE_DOF, na).copy_from(&c_a);
        g.rows_mut(BASE_DOF, na).copy_from(&g_a);
        Ok((c, g))
    }

    /// `q̈ = M⁻¹ (τ - C q̇ - g)`.
    pub fn forward_dynamics(
        &self,
        q: &DVector<f64>,
        dq: &DVector<f64>,
        tau: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        check_len("joint torques", self.dof(), tau.len())?;
        let m = self.mass_matrix(q)?;
        let (c, g) = self.bias_terms(q, dq)?;
        crate::math::spd_solve(&m, &(tau - c - g), "whole-body inertia")
    }

    /// Total arm kinetic plus potential energy (potential relative to the root).
    pub fn arm_energy(&self, q_arm: &[f64], dq_arm: &[f64]) -> f64 {
        let m = self.arm_mass_matrix(q_arm);
        let dq = DVector::from_column_slice(dq_arm);
        let kinetic = 0.5 * dq.dot(&(&m * &dq));
        let kin = self.arm_kinematics(q_arm);
        let g = self.gravity_in_root();
        let potential: f64 = self
            .link_mass_properties(&kin)
            .iter()
            .map(|(mass, com, _)| -mass * g.dot(com))
            .sum();
        kinetic + potential
    }

    /// Checks physical consistency: positive masses, SPD inertias, sizes.
    pub fn validate(&self) -> Result<()> {
        let name = &self.name;
        if self.arm.joints.is_empty() {
            return Err(Error::config(format!("model {name}.arm.joints"), "arm needs at least one joint"));
        }
        if self.arm.links.len() != self.arm.joints.len() {
            return Err(Error::config(
                format!("model {name}.arm"),
                "one link inertia per joint is required",
            ));
        }
        if self.arm.q_home.len() != self.arm.dof() {
            return Err(Error::config(
                format!("model {name}.arm.q_home"),
                format!("expected {} entries, got {}", self.arm.dof(), self.arm.q_home.len()),
            ));
        }
        for (i, link) in self.arm.links.iter().enumerate() {
            if !(link.mass > 0.0) {
                return Err(Error::config(format!("model {name}.arm.joints[{i}].mass"), "mass must be > 0"));
            }
            let sym = (link.inertia - link.inertia.transpose()).norm();
            if sym > 1e-12 || link.inertia.cholesky().is_none() {
                return Err(Error::config(
                    format!("model {name}.arm.joints[{i}].inertia"),
                    "inertia tensor must be symmetric positive definite",
                ));
            }
        }
        for i in 0..BASE_DOF {
            if !(self.base.virtual_inertia[i] > 0.0) || !(self.base.virtual_damping[i] > 0.0) {
                return Err(Error::config(
                    format!("model {name}.base"),
                    "virtual inertia and damping must be strictly positive",
                ));
            }
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Self> {
        let file: ModelFile = toml::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })?;
        let model = file.into_model(origin)?;
        model.validate()?;
        Ok(model)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text, path)
    }

    /// Bundled 7-DoF torque-controlled platform (Panda-scale arm).
    pub fn moca() -> Self {
        Self::from_toml_str(
            include_str!("../data/models/moca_panda.toml"),
            Path::new("moca_panda.toml"),
        )
        .expect("bundled model is valid")
    }

    /// Bundled 6-DoF velocity-controlled platform (UR16e-scale arm).
    pub fn kairos() -> Self {
        Self::from_toml_str(
            include_str!("../data/models/kairos_ur16e.toml"),
            Path::new("kairos_ur16e.toml"),
        )
        .expect("bundled model is valid")
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(&ModelFile::from_model(self)).expect("model serializes")
    }
}

/// Inertia about a point displaced by `-offset` from the body's com
/// (parallel-axis theorem).
fn shift_inertia(i_com: &Matrix3<f64>, mass: f64, offset: &Vector3<f64>) -> Matrix3<f64> {
    i_com + mass * (Matrix3::identity() * offset.norm_squared() - offset * offset.transpose())
}

// ---------------------------------------------------------------------------
// model file

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    version: u32,
    name: String,
    #[serde(default = "default_gravity")]
    gravity: f64,
    base: BaseSection,
    mount: TransformSection,
    arm: ArmSection,
}

fn default_gravity() -> f64 {
    STANDARD_GRAVITY
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BaseSection {
    virtual_inertia: [f64; 3],
    virtual_damping: [f64; 3],
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TransformSection {
    #[serde(default)]
    translation: [f64; 3],
    /// Roll, pitch, yaw in radians.
    #[serde(default)]
    rpy: [f64; 3],
}

impl TransformSection {
    fn to_isometry(&self) -> Isometry3<f64> {
        let [x, y, z] = self.translation;
        let [r, p, yw] = self.rpy;
        Isometry3::from_parts(
            Translation3::new(x, y, z),
            UnitQuaternion::from_euler_angles(r, p, yw),
        )
    }

    fn from_isometry(iso: &Isometry3<f64>) -> Self {
        let t = iso.translation.vector;
        let (r, p, y) = iso.rotation.euler_angles();
        Self {
            translation: [t.x, t.y, t.z],
            rpy: [r, p, y],
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArmSection {
    q_home: Vec<f64>,
    #[serde(default)]
    tool: TransformSection,
    joints: Vec<JointSection>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JointSection {
    a: f64,
    d: f64,
    alpha: f64,
    #[serde(default)]
    theta_offset: f64,
    mass: f64,
    com: [f64; 3],
    /// `[ixx, iyy, izz, ixy, ixz, iyz]` about the com, link frame.
    inertia: [f64; 6],
}

impl ModelFile {
    fn into_model(self, origin: &Path) -> Result<RobotModel> {
        if self.version != MODEL_FILE_VERSION {
            return Err(Error::Parse {
                path: origin.to_path_buf(),
                message: format!(
                    "unsupported model file version {} (expected {MODEL_FILE_VERSION})",
                    self.version
                ),
            });
        }
        let joints = self
            .arm
            .joints
            .iter()
            .map(|j| DhJoint {
                a: j.a,
                d: j.d,
                alpha: j.alpha,
                theta_offset: j.theta_offset,
            })
            .collect();
        let links = self
            .arm
            .joints
            .iter()
            .map(|j| {
                let [ixx, iyy, izz, ixy, ixz, iyz] = j.inertia;
                LinkInertia {
                    mass: j.mass,
                    com: Vector3::from(j.com),
                    inertia: Matrix3::new(ixx, ixy, ixz, ixy, iyy, iyz, ixz, iyz, izz),
                }
            })
            .collect();
        Ok(RobotModel {
            name: self.name,
            base: BaseModel {
                virtual_inertia: Vector3::from(self.base.virtual_inertia),
                virtual_damping: Vector3::from(self.base.virtual_damping),
            },
            arm: ArmModel {
                joints,
                links,
                q_home: DVector::from_vec(self.arm.q_home),
                tool: self.arm.tool.to_isometry(),
            },
            mount: self.mount.to_isometry(),
            gravity: self.gravity,
        })
    }

    fn from_model(model: &RobotModel) -> Self {
        ModelFile {
            version: MODEL_FILE_VERSION,
            name: model.name.clone(),
            gravity: model.gravity,
            base: BaseSection {
                virtual_inertia: model.base.virtual_inertia.into(),
                virtual_damping: model.base.virtual_damping.into(),
            },
            mount: TransformSection::from_isometry(&model.mount),
            arm: ArmSection {
                q_home: model.arm.q_home.iter().copied().collect(),
                tool: TransformSection::from_isometry(&model.arm.tool),
                joints: model
                    .arm
                    .joints
                    .iter()
                    .zip(&model.arm.links)
                    .map(|(j, l)| JointSection {
                        a: j.a,
                        d: j.d,
                        alpha: j.alpha,
                        theta_offset: j.theta_offset,
                        mass: l.mass,
                        com: l.com.into(),
                        inertia: [
                            l.inertia[(0, 0)],
                            l.inertia[(1, 1)],
                            l.inertia[(2, 2)],
                            l.inertia[(0, 1)],
                            l.inertia[(0, 2)],
                            l.inertia[(1, 2)],
                        ],
                    })
                    .collect(),
            },
        }
    }
}

/// Small analytic models used by tests and examples.
pub mod fixtures {
    use super::*;

    fn rod(mass: f64, length: f64) -> LinkInertia {
        // slender rod along -x of its distal DH frame
        let i_perp = mass * length * length / 12.0;
        let i_axial = 1e-4 * mass;
        LinkInertia {
            mass,
            com: Vector3::new(-0.5 * length, 0.0, 0.0),
            inertia: Matrix3::from_diagonal(&Vector3::new(i_axial, i_perp + i_axial, i_perp + i_axial)),
        }
    }

    /// Two-link planar arm with unit link lengths, joints about the root z axis.
    /// `mount_z` lifts the arm root above the base.
    pub fn planar_two_link(mount_z: f64) -> RobotModel {
        let joint = DhJoint {
            a: 1.0,
            d: 0.0,
            alpha: 0.0,
            theta_offset: 0.0,
        };
        RobotModel {
            name: "planar-2".into(),
            base: BaseModel {
                virtual_inertia: Vector3::new(105.0, 105.0, 210.0),
                virtual_damping: Vector3::new(1050.0, 1050.0, 2100.0),
            },
            arm: ArmModel {
                joints: vec![joint, joint],
                links: vec![rod(2.0, 1.0), rod(1.0, 1.0)],
                q_home: DVector::zeros(2),
                tool: Isometry3::identity(),
            },
            mount: Isometry3::translation(0.0, 0.0, mount_z),
            gravity: STANDARD_GRAVITY,
        }
    }

    /// The planar arm mounted so that its plane is vertical (root y axis = world z).
    pub fn vertical_two_link() -> RobotModel {
        let mut m = planar_two_link(0.5);
        m.mount = Isometry3::from_parts(
            Translation3::new(0.0, 0.0, 0.5),
            UnitQuaternion::from_axis_angle(&Vector3::x_axis(), std::f64::consts::FRAC_PI_2),
        );
        m
    }

    /// Generic 6-DoF arm with square whole-arm Jacobian (n_a = 6).
    pub fn six_dof() -> RobotModel {
        RobotModel::kairos()
    }

    /// Generic 7-DoF arm.
    pub fn seven_dof() -> RobotModel {
        RobotModel::moca()
    }
}
