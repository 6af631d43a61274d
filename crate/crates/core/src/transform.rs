//! Rigid transforms stored as an explicit rotation matrix plus translation.
//!
//! Orthonormality is checked whenever a transform is built from raw data or
//! produced by composition; drift beyond [`ORTHONORMAL_TOL`] is an error and is
//! never silently re-orthogonalized.

use std::ops::Mul;

use nalgebra::{Matrix3, Matrix4, Rotation3, Unit, Vector3};

use crate::error::{Error, Result};

/// Largest tolerated deviation of `RᵀR` from identity (and of `det R` from 1).
pub const ORTHONORMAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Builds a transform, rejecting rotation blocks that are not orthonormal
    /// with determinant +1.
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        let deviation = orthonormality_error(&rotation);
        if !(deviation <= ORTHONORMAL_TOL) || !translation.iter().all(|v| v.is_finite()) {
            return Err(Error::NotOrthonormal { deviation });
        }
        Ok(Self { rotation, translation })
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation,
        }
    }

    pub fn from_rotation(rotation: Rotation3<f64>) -> Self {
        Self {
            rotation: *rotation.matrix(),
            translation: Vector3::zeros(),
        }
    }

    /// Translation followed by fixed-axis roll/pitch/yaw (`Rz(yaw)·Ry(pitch)·Rx(roll)`).
    pub fn from_xyz_rpy(xyz: [f64; 3], rpy: [f64; 3]) -> Self {
        let rotation = Rotation3::from_euler_angles(rpy[0], rpy[1], rpy[2]);
        Self {
            rotation: *rotation.matrix(),
            translation: Vector3::from(xyz),
        }
    }

    /// Pure rotation by `angle` about the unit `axis`.
    pub fn about_axis(axis: &Unit<Vector3<f64>>, angle: f64) -> Self {
        Self::from_rotation(Rotation3::from_axis_angle(axis, angle))
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    pub fn transform_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// `self ∘ rhs`: maps points of the `rhs` child frame into this transform's parent frame.
    pub fn compose(&self, rhs: &RigidTransform) -> Self {
        Self {
            rotation: self.rotation * rhs.rotation,
            translation: self.rotation * rhs.translation + self.translation,
        }
    }

    pub fn to_homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    /// Re-validates the rotation block; used after long composition chains.
    pub fn checked(self) -> Result<Self> {
        Self::new(self.rotation, self.translation)
    }

    pub fn orthonormality_error(&self) -> f64 {
        orthonormality_error(&self.rotation)
    }
}

impl Mul for RigidTransform {
    type Output = RigidTransform;

    fn mul(self, rhs: RigidTransform) -> RigidTransform {
        self.compose(&rhs)
    }
}

impl<'a> Mul<&'a RigidTransform> for &'a RigidTransform {
    type Output = RigidTransform;

    fn mul(self, rhs: &'a RigidTransform) -> RigidTransform {
        self.compose(rhs)
    }
}

/// Max-abs deviation of `RᵀR` from identity combined with `|det R − 1|`.
pub fn orthonormality_error(r: &Matrix3<f64>) -> f64 {
    let gram = r.transpose() * r - Matrix3::identity();
    let off = gram.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    off.max((r.determinant() - 1.0).abs())
}

/// Wraps an angle into `(−π, π]`.
pub fn wrap_angle(angle: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut a = angle.rem_euclid(TAU);
    if a > PI {
        a -= TAU;
    }
    a
}

/// Wraps an undirected line angle into `(−π/2, π/2]`.
pub fn wrap_half_angle(angle: f64) -> f64 {
    use std::f64::consts::{FRAC_PI_2, PI};
    let mut a = angle.rem_euclid(PI);
    if a > FRAC_PI_2 {
        a -= PI;
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn rejects_scaled_rotation() {
        let r = Matrix3::identity() * 1.01;
        assert!(matches!(
            RigidTransform::new(r, Vector3::zeros()),
            Err(Error::NotOrthonormal { .. })
        ));
    }

    #[test]
    fn rejects_reflection() {
        let r = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0));
        assert!(RigidTransform::new(r, Vector3::zeros()).is_err());
    }

    #[test]
    fn inverse_round_trip() {
        let t = RigidTransform::from_xyz_rpy([0.1, -0.2, 0.3], [0.4, -0.5, 1.2]);
        let id = t * t.inverse();
        assert!((id.to_homogeneous() - Matrix4::identity()).abs().max() < 1e-14);
    }

    #[test]
    fn angle_wrapping() {
        assert_eq!(wrap_angle(PI), PI);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-15);
        assert!((wrap_angle(3.0 * PI / 2.0) + FRAC_PI_2).abs() < 1e-15);
        assert!((wrap_half_angle(-FRAC_PI_2) - FRAC_PI_2).abs() < 1e-15);
        assert!((wrap_half_angle(0.75 * PI) + 0.25 * PI).abs() < 1e-15);
    }
}
