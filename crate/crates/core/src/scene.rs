//! Ground-truth world model: rods, grasp poses, cameras and the
//! eelink→object transform.
//!
//! Object frame: origin at the rod's geometric center, `x` along the rod
//! axis, `z` perpendicular to the axis and pointing down into the table when
//! the rod lies flat. The center of mass sits at `(com_offset, 0, com_lateral)`.

use nalgebra::{Matrix3, Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::transform::{wrap_angle, RigidTransform};

#[derive(Debug, Clone, PartialEq)]
pub struct RodObject {
    pub length: f64,
    pub radius: f64,
    pub mass: f64,
    /// CoM position along the rod axis, measured from the geometric center.
    pub com_offset: f64,
    /// CoM distance from the rod axis along object `z`, in `[0, radius]`.
    pub com_lateral: f64,
    /// world ← object
    pub world_pose: RigidTransform,
}

impl RodObject {
    pub fn new(
        length: f64,
        radius: f64,
        mass: f64,
        com_offset: f64,
        com_lateral: f64,
        world_pose: RigidTransform,
    ) -> Result<Self> {
        let rod = Self {
            length,
            radius,
            mass,
            com_offset,
            com_lateral,
            world_pose,
        };
        rod.validate()?;
        Ok(rod)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.length, self.radius, self.mass, self.com_offset, self.com_lateral]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidInput("rod parameters must be finite".into()));
        }
        if !(self.length > 0.0) {
            return Err(Error::InvalidInput(format!(
                "rod length must be positive, got {}",
                self.length
            )));
        }
        if !(self.radius > 0.0 && self.radius <= self.length / 4.0) {
            return Err(Error::InvalidInput(format!(
                "rod radius must lie in (0, length/4], got {}",
                self.radius
            )));
        }
        if !(self.mass > 0.0) {
            return Err(Error::InvalidInput(format!(
                "rod mass must be positive, got {}",
                self.mass
            )));
        }
        if self.com_offset.abs() > self.length / 2.0 {
            return Err(Error::InvalidInput(format!(
                "com_offset {} outside ±length/2",
                self.com_offset
            )));
        }
        if !(0.0..=self.radius).contains(&self.com_lateral) {
            return Err(Error::InvalidInput(format!(
                "com_lateral {} outside [0, radius]",
                self.com_lateral
            )));
        }
        Ok(())
    }

    /// Same rod lying on a table of height `table_z`, axis horizontal at `yaw`.
    pub fn lying_at(&self, center: Vector2<f64>, yaw: f64, table_z: f64) -> Self {
        let mut rod = self.clone();
        rod.world_pose = table_pose(center, yaw, table_z + self.radius);
        rod
    }

    pub fn center(&self) -> Vector3<f64> {
        *self.world_pose.translation()
    }

    /// World direction of object `x`.
    pub fn axis(&self) -> Vector3<f64> {
        self.world_pose.rotation().column(0).into_owned()
    }

    /// Heading of the rod axis in the table plane.
    pub fn yaw(&self) -> f64 {
        let a = self.axis();
        a.y.atan2(a.x)
    }

    /// Whether the axis is horizontal (within 1e-9).
    pub fn is_lying(&self) -> bool {
        self.axis().z.abs() < 1e-9
    }

    /// Axis segment end points (the capsule's core).
    pub fn endpoints(&self) -> (Vector3<f64>, Vector3<f64>) {
        let h = Vector3::new(self.length / 2.0, 0.0, 0.0);
        (
            self.world_pose.transform_point(&-h),
            self.world_pose.transform_point(&h),
        )
    }

    pub fn com_local(&self) -> Vector3<f64> {
        Vector3::new(self.com_offset, 0.0, self.com_lateral)
    }

    pub fn com_world(&self) -> Vector3<f64> {
        self.world_pose.transform_point(&self.com_local())
    }

    pub fn weight(&self, gravity: f64) -> f64 {
        self.mass * gravity
    }

    /// Signed position of a world point's projection along the rod axis,
    /// measured from the geometric center.
    pub fn axial_coordinate(&self, p: &Vector3<f64>) -> f64 {
        self.world_pose.inverse().transform_point(p).x
    }
}

/// world ← object pose of a flat rod: `Rz(yaw)·Rx(π)` at the given center.
pub fn table_pose(center: Vector2<f64>, yaw: f64, axis_height: f64) -> RigidTransform {
    let (s, c) = yaw.sin_cos();
    let rotation = Matrix3::new(c, s, 0.0, s, -c, 0.0, 0.0, 0.0, -1.0);
    RigidTransform::new(rotation, Vector3::new(center.x, center.y, axis_height))
        .expect("flat rod rotation is orthonormal")
}

/// Planar top-down grasp. `yaw` is the heading of the jaw closing direction,
/// perpendicular to the grasped rod.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraspPose {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub yaw: f64,
    pub grip_force: f64,
}

impl GraspPose {
    pub fn new(x: f64, y: f64, z: f64, yaw: f64, grip_force: f64) -> Result<Self> {
        if !(grip_force > 0.0) || !grip_force.is_finite() {
            return Err(Error::InvalidInput(format!(
                "grip force must be positive, got {grip_force}"
            )));
        }
        if ![x, y, z, yaw].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("grasp pose must be finite".into()));
        }
        Ok(Self {
            x,
            y,
            z,
            yaw: wrap_angle(yaw),
            grip_force,
        })
    }

    pub fn position(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    /// Unit vector along which the eelink `x` axis (the grasped rod's axis) points.
    pub fn rod_direction(&self) -> Vector3<f64> {
        Vector3::new(self.yaw.sin(), -self.yaw.cos(), 0.0)
    }

    /// world ← eelink at the grasp: `x` along the rod, `y` along the jaw
    /// closing direction reversed, `z` pointing down (approach direction).
    pub fn eelink_frame(&self) -> RigidTransform {
        let (s, c) = self.yaw.sin_cos();
        let rotation = Matrix3::new(s, -c, 0.0, -c, -s, 0.0, 0.0, 0.0, -1.0);
        RigidTransform::new(rotation, self.position()).expect("grasp rotation is orthonormal")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CameraKind {
    TopDown,
    Side,
}

/// Orthographic camera. Rays travel along camera `+z`; pixel `(col, row)`
/// has image-plane center `((col + ½ − W/2)·scale, (row + ½ − H/2)·scale)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraModel {
    /// world ← camera
    pub pose: RigidTransform,
    pub kind: CameraKind,
    pub width: usize,
    pub height: usize,
    /// metres per pixel
    pub scale: f64,
}

const OPTICAL_AXIS_TOL: f64 = 1e-6;

impl CameraModel {
    pub fn new(pose: RigidTransform, kind: CameraKind, width: usize, height: usize, scale: f64) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput("camera resolution must be non-zero".into()));
        }
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::InvalidInput(format!(
                "camera scale must be positive, got {scale}"
            )));
        }
        let axis = pose.rotation().column(2).into_owned();
        let down = Vector3::new(0.0, 0.0, -1.0);
        let ok = match kind {
            CameraKind::TopDown => axis.angle(&down) <= OPTICAL_AXIS_TOL,
            CameraKind::Side => (axis.angle(&down) - std::f64::consts::FRAC_PI_2).abs() <= OPTICAL_AXIS_TOL,
        };
        if !ok {
            return Err(Error::InvalidInput(format!(
                "{kind:?} camera optical axis {:?} violates its gravity alignment",
                axis.as_slice()
            )));
        }
        Ok(Self {
            pose,
            kind,
            width,
            height,
            scale,
        })
    }

    /// Camera above the table looking straight down, image `x` along world
    /// `x` and image `y` along world `−y`.
    pub fn top_down(center: Vector2<f64>, height_above: f64, width: usize, height: usize, scale: f64) -> Result<Self> {
        let rotation = Matrix3::new(1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, -1.0);
        let pose = RigidTransform::new(rotation, Vector3::new(center.x, center.y, height_above))?;
        Self::new(pose, CameraKind::TopDown, width, height, scale)
    }

    /// Side camera rigidly mounted on the eelink: image `x` along eelink `x`,
    /// image `y` along eelink `z`, looking along eelink `−y`. The image
    /// center coincides with the eelink origin.
    pub fn side_mounted(eelink: &RigidTransform, width: usize, height: usize, scale: f64) -> Result<Self> {
        let mount_rotation = Matrix3::new(1.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0);
        let mount = RigidTransform::new(mount_rotation, Vector3::new(0.0, 0.3, 0.0))?;
        Self::new(eelink.compose(&mount), CameraKind::Side, width, height, scale)
    }

    pub fn optical_axis(&self) -> Vector3<f64> {
        self.pose.rotation().column(2).into_owned()
    }

    /// Orthographic projection of a world point onto the image plane (metres).
    pub fn project(&self, p: &Vector3<f64>) -> Vector2<f64> {
        let c = self.pose.inverse().transform_point(p);
        Vector2::new(c.x, c.y)
    }

    pub fn pixel_center(&self, col: usize, row: usize) -> Vector2<f64> {
        Vector2::new(
            (col as f64 + 0.5 - self.width as f64 / 2.0) * self.scale,
            (row as f64 + 0.5 - self.height as f64 / 2.0) * self.scale,
        )
    }

    /// World point on the image plane (camera `z = 0`) for plane coordinates.
    pub fn unproject(&self, plane: &Vector2<f64>) -> Vector3<f64> {
        self.pose.transform_point(&Vector3::new(plane.x, plane.y, 0.0))
    }

    /// World direction of an image-plane vector.
    pub fn unproject_direction(&self, v: &Vector2<f64>) -> Vector3<f64> {
        self.pose.transform_vector(&Vector3::new(v.x, v.y, 0.0))
    }
}

/// eelink → object transform `M`: object coordinates of an eelink-frame point
/// are `M · p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectTransform {
    pub m: RigidTransform,
}

impl ObjectTransform {
    pub fn new(m: RigidTransform) -> Self {
        Self { m }
    }

    /// Rotation entry `r_ij` with one-based indices.
    pub fn r(&self, i: usize, j: usize) -> f64 {
        self.m.rotation()[(i - 1, j - 1)]
    }

    pub fn p(&self) -> Vector3<f64> {
        *self.m.translation()
    }

    /// Guards divisions by `r33`.
    pub fn check_r33(&self) -> Result<f64> {
        let r33 = self.r(3, 3);
        if r33.abs() < 1e-6 {
            return Err(Error::NearSingularPose { r33 });
        }
        Ok(r33)
    }
}

/// Fraction of the rod (centered) from which random grasps are drawn.
pub const GRASP_SPAN: f64 = 0.9;

/// Random grasp on a flat rod: point uniform along the central 90% of the
/// axis, jaws perpendicular to the rod, eelink origin on the axis.
pub fn sample_random_grasp(rod: &RodObject, grip_force: f64, seed: u64) -> Result<GraspPose> {
    if !rod.is_lying() {
        return Err(Error::InvalidInput(
            "random grasps need a rod lying on the table".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = GRASP_SPAN * rod.length / 2.0;
    let s: f64 = rng.random_range(-half..=half);
    let p = rod.world_pose.transform_point(&Vector3::new(s, 0.0, 0.0));
    GraspPose::new(p.x, p.y, p.z, rod.yaw() + std::f64::consts::FRAC_PI_2, grip_force)
}

/// A rod together with its identifier and the grip force used to hold it.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneObject {
    pub id: String,
    pub rod: RodObject,
    pub grip_force: f64,
}

/// Canonical six-rod benchmark: radius strictly increasing from `obj1` to
/// `obj6`, CoM always at the surface (`com_lateral = radius`). Grip forces
/// come from `calibrate_grip` (naive failure rate 0.375). Values are
/// mirrored in `scenes/default.toml`.
pub const CANONICAL_OBJECTS: [CanonicalRod; 6] = [
    CanonicalRod {
        id: "obj1",
        length: 0.50,
        radius: 0.005,
        mass: 1.6,
        com_fraction: 0.30,
        grip_force: 677.1,
    },
    CanonicalRod {
        id: "obj2",
        length: 0.45,
        radius: 0.010,
        mass: 1.5,
        com_fraction: 0.25,
        grip_force: 476.1,
    },
    CanonicalRod {
        id: "obj3",
        length: 0.40,
        radius: 0.015,
        mass: 1.4,
        com_fraction: 0.35,
        grip_force: 553.3,
    },
    CanonicalRod {
        id: "obj4",
        length: 0.35,
        radius: 0.020,
        mass: 1.3,
        com_fraction: 0.20,
        grip_force: 256.8,
    },
    CanonicalRod {
        id: "obj5",
        length: 0.30,
        radius: 0.025,
        mass: 1.2,
        com_fraction: 0.28,
        grip_force: 284.4,
    },
    CanonicalRod {
        id: "obj6",
        length: 0.25,
        radius: 0.030,
        mass: 1.1,
        com_fraction: 0.12,
        grip_force: 93.1,
    },
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanonicalRod {
    pub id: &'static str,
    pub length: f64,
    pub radius: f64,
    pub mass: f64,
    /// `com_offset / length`
    pub com_fraction: f64,
    pub grip_force: f64,
}

impl CanonicalRod {
    pub fn rod(&self) -> RodObject {
        RodObject::new(
            self.length,
            self.radius,
            self.mass,
            self.com_fraction * self.length,
            self.radius,
            table_pose(Vector2::zeros(), 0.0, self.radius),
        )
        .expect("canonical rods are valid")
    }
}

/// The six canonical rods, lying at the origin of a table at height zero.
pub fn paper_objects() -> Vec<RodObject> {
    CANONICAL_OBJECTS.iter().map(CanonicalRod::rod).collect()
}

pub fn canonical_scene_objects() -> Vec<SceneObject> {
    CANONICAL_OBJECTS
        .iter()
        .map(|c| SceneObject {
            id: c.id.to_string(),
            rod: c.rod(),
            grip_force: c.grip_force,
        })
        .collect()
}

/// Draws a uniform heading in `(−π, π]`.
pub fn random_yaw<R: Rng>(rng: &mut R) -> f64 {
    wrap_angle(rng.random_range(-std::f64::consts::PI..std::f64::consts::PI))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_6};

    #[test]
    fn canonical_radii_increase() {
        let objs = paper_objects();
        assert_eq!(objs.len(), 6);
        for w in objs.windows(2) {
            assert!(w[0].radius < w[1].radius);
        }
        for o in &objs {
            o.validate().unwrap();
            assert!((0.2..=0.5).contains(&o.length));
            assert!((0.005..=0.030).contains(&o.radius));
            let frac = o.com_offset / o.length;
            assert!((0.1..=0.35).contains(&frac));
        }
    }

    #[test]
    fn rod_invariants_enforced() {
        let pose = RigidTransform::identity();
        assert!(RodObject::new(0.4, 0.2, 1.0, 0.0, 0.0, pose).is_err());
        assert!(RodObject::new(0.4, 0.01, 0.0, 0.0, 0.0, pose).is_err());
        assert!(RodObject::new(0.4, 0.01, 1.0, 0.21, 0.0, pose).is_err());
        assert!(RodObject::new(0.4, 0.01, 1.0, 0.1, 0.02, pose).is_err());
        assert!(RodObject::new(0.4, 0.01, 1.0, 0.2, 0.01, pose).is_ok());
    }

    #[test]
    fn grasp_is_deterministic() {
        let rod = paper_objects()[2].lying_at(Vector2::new(0.3, 0.1), 0.4, 0.0);
        let a = sample_random_grasp(&rod, 20.0, 99).unwrap();
        let b = sample_random_grasp(&rod, 20.0, 99).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_random_grasp(&rod, 20.0, 100).unwrap());
    }

    #[test]
    fn grasp_perpendicular_to_rotated_rod() {
        let rod = paper_objects()[0].lying_at(Vector2::new(0.4, -0.1), FRAC_PI_6, 0.0);
        for seed in 0..20 {
            let g = sample_random_grasp(&rod, 10.0, seed).unwrap();
            let diff = wrap_angle(g.yaw - (FRAC_PI_6 + FRAC_PI_2));
            assert!(diff.abs() < 1e-12 || (diff.abs() - std::f64::consts::PI).abs() < 1e-12);
            assert!((g.rod_direction() - rod.axis()).norm() < 1e-12);
        }
    }

    #[test]
    fn eelink_frame_matches_object_frame_for_sampled_grasps() {
        let rod = paper_objects()[1].lying_at(Vector2::new(0.1, 0.2), -2.0, 0.05);
        let g = sample_random_grasp(&rod, 10.0, 3).unwrap();
        let diff = g.eelink_frame().rotation() - rod.world_pose.rotation();
        assert!(diff.abs().max() < 1e-12);
    }

    #[test]
    fn camera_axis_invariants() {
        assert!(CameraModel::top_down(Vector2::zeros(), 2.0, 10, 10, 0.01).is_ok());
        let tilted = RigidTransform::from_xyz_rpy([0.0; 3], [0.1, 0.0, 0.0]);
        assert!(CameraModel::new(tilted, CameraKind::TopDown, 10, 10, 0.01).is_err());
        let eelink = GraspPose::new(0.1, 0.2, 0.3, 0.7, 5.0).unwrap().eelink_frame();
        let side = CameraModel::side_mounted(&eelink, 10, 10, 0.01).unwrap();
        assert!(side.optical_axis().z.abs() < 1e-12);
    }

    #[test]
    fn yaw_is_normalized() {
        let g = GraspPose::new(0.0, 0.0, 0.0, 3.0 * FRAC_PI_2, 1.0).unwrap();
        assert!((g.yaw + FRAC_PI_2).abs() < 1e-12);
        assert!(GraspPose::new(0.0, 0.0, 0.0, 0.0, 0.0).is_err());
    }
}
