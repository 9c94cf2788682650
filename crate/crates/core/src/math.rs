//! Small linear-algebra and pose helpers shared by the controllers.

use nalgebra::{DMatrix, DVector, Isometry3, UnitQuaternion, Vector3, Vector6};

use crate::error::{Error, Result};

/// End-effector pose in the world frame.
pub type Pose = Isometry3<f64>;

/// Linear part first, angular part second.
pub type Twist = Vector6<f64>;

pub fn twist(linear: Vector3<f64>, angular: Vector3<f64>) -> Twist {
    Vector6::new(
        linear.x, linear.y, linear.z, angular.x, angular.y, angular.z,
    )
}

pub fn linear(t: &Twist) -> Vector3<f64> {
    Vector3::new(t[0], t[1], t[2])
}

pub fn angular(t: &Twist) -> Vector3<f64> {
    Vector3::new(t[3], t[4], t[5])
}

/// Rotation vector (axis times angle) taking `current` onto `desired`,
/// expressed in the world frame: log(q_d * q^-1).
pub fn orientation_error(desired: &UnitQuaternion<f64>, current: &UnitQuaternion<f64>) -> Vector3<f64> {
    let mut delta = desired * current.inverse();
    // shortest path
    if delta.w < 0.0 {
        delta = UnitQuaternion::new_unchecked(-delta.into_inner());
    }
    delta.scaled_axis()
}

/// Pose error `[p_d - p; log(q_d q^-1)]`.
pub fn pose_error(desired: &Pose, current: &Pose) -> Twist {
    let dp = desired.translation.vector - current.translation.vector;
    let dr = orientation_error(&desired.rotation, &current.rotation);
    twist(dp, dr)
}

/// Renormalizes a quaternion that has drifted more than `1e-6` from unit norm.
pub fn renormalized(q: &UnitQuaternion<f64>) -> UnitQuaternion<f64> {
    let n = q.as_ref().norm();
    if (n - 1.0).abs() > 1e-6 {
        UnitQuaternion::from_quaternion(*q.as_ref())
    } else {
        *q
    }
}

/// Inverse of a symmetric positive-definite matrix via Cholesky.
pub fn spd_inverse(m: &DMatrix<f64>, what: &'static str) -> Result<DMatrix<f64>> {
    m.clone()
        .cholesky()
        .map(|c| c.inverse())
        .ok_or(Error::NotPositiveDefinite(what))
}

/// Solves `m x = b` for symmetric positive-definite `m`.
pub fn spd_solve(m: &DMatrix<f64>, b: &DVector<f64>, what: &'static str) -> Result<DVector<f64>> {
    m.clone()
        .cholesky()
        .map(|c| c.solve(b))
        .ok_or(Error::NotPositiveDefinite(what))
}

pub fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

pub fn diag(values: &[f64]) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_column_slice(values))
}

pub fn is_finite3(v: &Vector3<f64>) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Skew-symmetric cross-product matrix.
pub fn skew(v: &Vector3<f64>) -> nalgebra::Matrix3<f64> {
    nalgebra::Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orientation_error_small_rotation_about_z() {
        let d = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), 0.03);
        let e = orientation_error(&d, &UnitQuaternion::identity());
        assert!((e - Vector3::new(0.0, 0.0, 0.03)).norm() < 1e-12);
    }

    #[test]
    fn orientation_error_takes_shortest_path() {
        let d = UnitQuaternion::from_axis_angle(&Vector3::x_axis(), 0.2);
        let flipped = UnitQuaternion::new_unchecked(-d.into_inner());
        let e = orientation_error(&flipped, &UnitQuaternion::identity());
        assert!((e - Vector3::new(0.2, 0.0, 0.0)).norm() < 1e-12);
    }
}
