//! Oracles shared by the unit suites and the acceptance harness. Each check
//! returns the worst deviation it saw so callers pick their own threshold.
#![allow(dead_code)]

use std::time::Instant;

use cocarry::math::Pose;
use cocarry::model::{RobotModel, BASE_DOF};
use cocarry::wbc_ik::{self, DampingSchedule, IkParams};
use cocarry::wbc_impedance::solve_torques;
use nalgebra::{DMatrix, DVector, Matrix4, Vector3, Vector6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_matrix(r: usize, c: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
}

pub fn random_vector(n: usize, scale: f64, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(-scale..scale))
}

pub fn random_spd(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let b = random_matrix(n, n, rng);
    &b * b.transpose() + DMatrix::identity(n, n) * 0.5
}

pub struct Instance {
    pub m: DMatrix<f64>,
    pub j: DMatrix<f64>,
    pub f: Vector6<f64>,
    pub tau_0: DVector<f64>,
    pub w: DMatrix<f64>,
}

pub fn instance(n: usize, rng: &mut ChaCha8Rng) -> Instance {
    let m = random_spd(n, rng);
    let h = DVector::from_fn(n, |_, _| rng.random_range(0.5..2.0));
    let m_inv = m.clone().try_inverse().unwrap();
    let hm = DMatrix::from_diagonal(&h);
    Instance {
        w: &hm * m_inv * &hm,
        j: random_matrix(6, n, rng),
        f: Vector6::from_fn(|_, _| rng.random_range(-20.0..20.0)),
        tau_0: random_vector(n, 5.0, rng),
        m,
    }
}

/// `J̄ᵀ = Λ J M⁻¹`, built with plain inverses.
pub fn dynamically_consistent_transpose(m: &DMatrix<f64>, j: &DMatrix<f64>) -> DMatrix<f64> {
    let m_inv = m.clone().try_inverse().unwrap();
    let lambda = (j * &m_inv * j.transpose()).try_inverse().unwrap();
    lambda * j * m_inv
}

/// Minimizer of `½‖τ − τ₀‖²_W` subject to `J̄ᵀ τ = F`, from the full KKT system.
pub fn kkt_oracle(inst: &Instance) -> DVector<f64> {
    let n = inst.m.nrows();
    let a = dynamically_consistent_transpose(&inst.m, &inst.j);
    let mut kkt = DMatrix::zeros(n + 6, n + 6);
    kkt.view_mut((0, 0), (n, n)).copy_from(&inst.w);
    kkt.view_mut((0, n), (n, 6)).copy_from(&a.transpose());
    kkt.view_mut((n, 0), (6, n)).copy_from(&a);
    let mut rhs = DVector::zeros(n + 6);
    rhs.rows_mut(0, n).copy_from(&(&inst.w * &inst.tau_0));
    rhs.rows_mut(n, 6).copy_from(&inst.f);
    let sol = kkt.lu().solve(&rhs).unwrap();
    sol.rows(0, n).into_owned()
}

pub struct KktOutcome {
    pub relative_error: f64,
    pub residual: f64,
    pub seconds: f64,
}

pub fn kkt_check(count: usize, seed: u64) -> KktOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = Instant::now();
    let mut out = KktOutcome {
        relative_error: 0.0,
        residual: 0.0,
        seconds: 0.0,
    };
    for k in 0..count {
        let n = if k % 2 == 0 { 9 } else { 10 };
        let inst = instance(n, &mut rng);
        let tau = solve_torques(&inst.m, &inst.j, &inst.f, &inst.tau_0, &inst.w).unwrap();
        let oracle = kkt_oracle(&inst);
        out.relative_error = out.relative_error.max((&tau - &oracle).norm() / oracle.norm());
        let a = dynamically_consistent_transpose(&inst.m, &inst.j);
        let residual = (&a * &tau - DVector::from_column_slice(inst.f.as_slice())).norm();
        out.residual = out.residual.max(residual);
    }
    out.seconds = start.elapsed().as_secs_f64();
    out
}

/// Worst `‖τ − JᵀF‖` over well-conditioned kairos arm configurations, with
/// random weights and posture torques.
pub fn square_jacobian_check(count: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let model = RobotModel::kairos();
    assert_eq!(model.arm_dof(), 6);
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < count {
        let q = DVector::from_fn(model.dof(), |_, _| rng.random_range(-2.5..2.5));
        let j = model.arm_jacobian(&q).unwrap();
        let sv = j.clone().svd(false, false).singular_values;
        if sv.min() < 0.05 * sv.max() {
            continue;
        }
        let m = model.arm_mass_matrix(&q.as_slice()[BASE_DOF..]);
        let f = Vector6::from_fn(|_, _| rng.random_range(-20.0..20.0));
        let expected = j.transpose() * DVector::from_column_slice(f.as_slice());
        for _ in 0..3 {
            let w = random_spd(6, &mut rng);
            let tau_0 = random_vector(6, 10.0, &mut rng);
            let tau = solve_torques(&m, &j, &f, &tau_0, &w).unwrap();
            worst = worst.max((&tau - &expected).norm() / expected.norm().max(1.0));
        }
        done += 1;
    }
    worst
}

pub fn random_ik_params(n: usize, rng: &mut ChaCha8Rng) -> IkParams {
    IkParams {
        gain: Vector6::from_element(0.1),
        task_weight: Vector6::from_fn(|_, _| rng.random_range(1.0..1000.0)),
        velocity_weight: DVector::from_fn(n, |_, _| rng.random_range(0.5..10.0)),
        posture_weight: DVector::from_fn(n, |i, _| if i < BASE_DOF { 0.0 } else { 1.0 }),
        q_0: random_vector(n, 2.0, rng),
        schedule: DampingSchedule::default(),
        velocity_time_constant: 0.02,
    }
}

/// Worst change of `J·dq` caused by the posture task, undamped.
pub fn ik_hierarchy_check(count: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for k in 0..count {
        let n = if k % 2 == 0 { 9 } else { 10 };
        let j = random_matrix(6, n, &mut rng);
        let params = random_ik_params(n, &mut rng);
        let xdot_d = Vector6::from_fn(|_, _| rng.random_range(-0.3..0.3));
        let x = Pose::identity();
        let dq_1 = wbc_ik::solve_primary(&j, &x, &xdot_d, &x, &params, 0.0).unwrap();
        let q = random_vector(n, 2.0, &mut rng);
        let dq_d = wbc_ik::solve_secondary(&q, &dq_1, &j, &params, 0.0).unwrap();
        worst = worst.max((&j * (&dq_d - &dq_1)).norm());
    }
    worst
}

pub fn random_q(model: &RobotModel, rng: &mut ChaCha8Rng) -> DVector<f64> {
    let mut q = DVector::zeros(model.dof());
    q[0] = rng.random_range(-2.0..2.0);
    q[1] = rng.random_range(-2.0..2.0);
    q[2] = rng.random_range(-3.1..3.1);
    for i in BASE_DOF..model.dof() {
        q[i] = rng.random_range(-2.5..2.5);
    }
    q
}

/// Plain 4x4 homogeneous DH chain, written without the crate's isometries.
pub fn reference_fk(model: &RobotModel, q: &DVector<f64>) -> Matrix4<f64> {
    let (c, s) = (q[2].cos(), q[2].sin());
    #[rustfmt::skip]
    let base = Matrix4::new(
        c, -s, 0.0, q[0],
        s,  c, 0.0, q[1],
        0.0, 0.0, 1.0, 0.0,
        0.0, 0.0, 0.0, 1.0,
    );
    let mut t = base * model.mount.to_homogeneous();
    for (i, j) in model.arm.joints.iter().enumerate() {
        let th = q[BASE_DOF + i] + j.theta_offset;
        let (ct, st) = (th.cos(), th.sin());
        let (ca, sa) = (j.alpha.cos(), j.alpha.sin());
        #[rustfmt::skip]
        let a = Matrix4::new(
            ct, -st * ca,  st * sa, j.a * ct,
            st,  ct * ca, -ct * sa, j.a * st,
            0.0,      sa,       ca, j.d,
            0.0,     0.0,      0.0, 1.0,
        );
        t *= a;
    }
    t * model.arm.tool.to_homogeneous()
}

/// Worst entry-wise gap between the analytic whole-body Jacobian and central
/// differences of the reference chain, alternating moca and kairos.
pub fn jacobian_fd_check(count: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = 1e-7;
    let mut worst: f64 = 0.0;
    for k in 0..count {
        let model = if k % 2 == 0 { RobotModel::moca() } else { RobotModel::kairos() };
        let q = random_q(&model, &mut rng);
        let j = model.whole_body_jacobian(&q).unwrap();
        for i in 0..model.dof() {
            let mut qp = q.clone();
            let mut qm = q.clone();
            qp[i] += h;
            qm[i] -= h;
            let tp = reference_fk(&model, &qp);
            let tm = reference_fk(&model, &qm);
            let lin = (tp.fixed_view::<3, 1>(0, 3) - tm.fixed_view::<3, 1>(0, 3)) / (2.0 * h);
            // small rotation R_p R_mᵀ ≈ I + [w]x; read w from the skew part
            let d = tp.fixed_view::<3, 3>(0, 0) * tm.fixed_view::<3, 3>(0, 0).transpose();
            let ang = Vector3::new(d[(2, 1)] - d[(1, 2)], d[(0, 2)] - d[(2, 0)], d[(1, 0)] - d[(0, 1)]) / (4.0 * h);
            for r in 0..3 {
                worst = worst.max((j[(r, i)] - lin[r]).abs());
                worst = worst.max((j[(r + 3, i)] - ang[r]).abs());
            }
        }
    }
    worst
}

/// Kinetic energy summed link by link from link-frame velocities built only
/// from joint axes and origins.
pub fn link_sum_kinetic_energy(model: &RobotModel, q_arm: &[f64], dq: &[f64]) -> f64 {
    let kin = model.arm_kinematics(q_arm);
    let mut total = 0.0;
    for (i, link) in model.arm.links.iter().enumerate() {
        let frame = kin.frames[i];
        let com = (frame * nalgebra::Point3::from(link.com)).coords;
        let mut v = Vector3::zeros();
        let mut w = Vector3::zeros();
        for j in 0..=i {
            w += kin.axes[j] * dq[j];
            v += kin.axes[j].cross(&(com - kin.origins[j])) * dq[j];
        }
        let r = frame.rotation.to_rotation_matrix();
        let inertia = r.matrix() * link.inertia * r.matrix().transpose();
        total += 0.5 * link.mass * v.norm_squared() + 0.5 * w.dot(&(inertia * w));
    }
    total
}

/// Worst gap between `½ dqᵀ M dq` and the link-sum energy.
pub fn kinetic_energy_check(models: &[RobotModel], per_model: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for model in models {
        for _ in 0..per_model {
            let q = random_q(model, &mut rng);
            let dq = random_vector(model.arm_dof(), 2.0, &mut rng);
            let qa = &q.as_slice()[BASE_DOF..];
            let quad = 0.5 * dq.dot(&(model.arm_mass_matrix(qa) * &dq));
            worst = worst.max((quad - link_sum_kinetic_energy(model, qa, dq.as_slice())).abs());
        }
    }
    worst
}

type State = (DVector<f64>, DVector<f64>, f64);

/// Free motion with zero command. The extra scalar accumulates the energy
/// dissipated by the base damping.
fn derivative(model: &RobotModel, s: &State) -> State {
    let (q, dq, _) = s;
    let tau = DVector::zeros(model.dof());
    let ddq = model.forward_dynamics(q, dq, &tau).unwrap();
    let mut dissipated = 0.0;
    for i in 0..BASE_DOF {
        dissipated += model.base.virtual_damping[i] * dq[i] * dq[i];
    }
    (dq.clone(), ddq, dissipated)
}

fn axpy(s: &State, k: &State, h: f64) -> State {
    (&s.0 + &k.0 * h, &s.1 + &k.1 * h, s.2 + k.2 * h)
}

fn total_energy(model: &RobotModel, s: &State) -> f64 {
    let (q, dq, dissipated) = s;
    let base_kinetic: f64 = (0..BASE_DOF)
        .map(|i| 0.5 * model.base.virtual_inertia[i] * dq[i] * dq[i])
        .sum();
    model.arm_energy(&q.as_slice()[BASE_DOF..], &dq.as_slice()[BASE_DOF..]) + base_kinetic + dissipated
}

pub struct PowerOutcome {
    pub drift: f64,
    pub dissipated: f64,
}

/// One second of unforced motion under RK4; the drift of kinetic plus
/// potential plus dissipated energy.
pub fn power_balance_check(model: &RobotModel, seed: u64) -> PowerOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = random_q(model, &mut rng);
    let mut dq = random_vector(model.dof(), 0.5, &mut rng);
    dq[0] = 0.3;
    let mut s: State = (q, dq, 0.0);
    let e0 = total_energy(model, &s);
    let h = 5e-4;
    let mut worst: f64 = 0.0;
    for _ in 0..2000 {
        let k1 = derivative(model, &s);
        let k2 = derivative(model, &axpy(&s, &k1, 0.5 * h));
        let k3 = derivative(model, &axpy(&s, &k2, 0.5 * h));
        let k4 = derivative(model, &axpy(&s, &k3, h));
        let incr = (
            (&k1.0 + &k2.0 * 2.0 + &k3.0 * 2.0 + &k4.0) / 6.0,
            (&k1.1 + &k2.1 * 2.0 + &k3.1 * 2.0 + &k4.1) / 6.0,
            (k1.2 + 2.0 * k2.2 + 2.0 * k3.2 + k4.2) / 6.0,
        );
        s = axpy(&s, &incr, h);
        worst = worst.max((total_energy(model, &s) - e0).abs());
    }
    PowerOutcome {
        drift: worst,
        dissipated: s.2,
    }
}
