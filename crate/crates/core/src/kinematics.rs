//! Serial-chain forward kinematics for all-revolute arms.
//!
//! Frame convention: joint `i`'s frame is `frame_{i-1} · parent_transform_i ·
//! Rot(axis_i, q_i)`, starting from the world frame. Link mass properties are
//! expressed in the joint frame after the joint rotation.

use nalgebra::{Unit, Vector3};

use crate::error::{Error, Result};
use crate::transform::RigidTransform;

/// Default gravity, world −z.
pub const STANDARD_GRAVITY: Vector3<f64> = Vector3::new(0.0, 0.0, -9.81);

#[derive(Debug, Clone, PartialEq)]
pub struct JointSpec {
    pub parent_transform: RigidTransform,
    pub axis: Unit<Vector3<f64>>,
    pub link_mass: f64,
    pub link_com: Vector3<f64>,
}

impl JointSpec {
    /// Validates the axis norm (1e-9) and the link mass before normalizing.
    pub fn new(
        parent_transform: RigidTransform,
        axis: Vector3<f64>,
        link_mass: f64,
        link_com: Vector3<f64>,
    ) -> Result<Self> {
        if (axis.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "joint axis must be a unit vector, |axis| = {}",
                axis.norm()
            )));
        }
        if !(link_mass >= 0.0) || !link_mass.is_finite() {
            return Err(Error::InvalidInput(format!(
                "link mass must be finite and non-negative, got {link_mass}"
            )));
        }
        Ok(Self {
            parent_transform,
            axis: Unit::new_normalize(axis),
            link_mass,
            link_com,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KinematicChain {
    joints: Vec<JointSpec>,
    eelink_offset: RigidTransform,
}

impl KinematicChain {
    pub fn new(joints: Vec<JointSpec>, eelink_offset: RigidTransform) -> Result<Self> {
        if joints.is_empty() {
            return Err(Error::InvalidInput("chain needs at least one joint".into()));
        }
        Ok(Self { joints, eelink_offset })
    }

    pub fn joints(&self) -> &[JointSpec] {
        &self.joints
    }

    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    pub fn eelink_offset(&self) -> &RigidTransform {
        &self.eelink_offset
    }

    /// Sub-chain of joints `range`, with `eelink_offset` kept only when the
    /// range reaches the tip. Used to check FK composition.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.dof() {
            return Err(Error::InvalidInput(format!(
                "invalid joint range {start}..{end} for a {}-joint chain",
                self.dof()
            )));
        }
        let eelink_offset = if end == self.dof() {
            self.eelink_offset
        } else {
            RigidTransform::identity()
        };
        Ok(Self {
            joints: self.joints[start..end].to_vec(),
            eelink_offset,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmState {
    pub q: Vec<f64>,
}

impl ArmState {
    pub fn new(q: Vec<f64>) -> Self {
        Self { q }
    }

    pub fn zeros(n: usize) -> Self {
        Self { q: vec![0.0; n] }
    }

    pub fn check(&self, chain: &KinematicChain) -> Result<()> {
        if self.q.len() != chain.dof() {
            return Err(Error::DimensionMismatch {
                expected: chain.dof(),
                got: self.q.len(),
            });
        }
        if let Some(bad) = self.q.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("joint angle {bad} is not finite")));
        }
        Ok(())
    }
}

/// World poses of every joint frame and of the eelink.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSet {
    pub joint_frames: Vec<RigidTransform>,
    pub eelink_frame: RigidTransform,
}

/// Axis direction and lever arm of one joint, both in world coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointLever {
    pub axis: Vector3<f64>,
    /// Vector from the joint origin to the eelink origin.
    pub r_to_eelink: Vector3<f64>,
}

/// Per-joint levers plus the eelink pose they were evaluated at.
#[derive(Debug, Clone, PartialEq)]
pub struct LeverArms {
    pub joints: Vec<JointLever>,
    pub eelink_frame: RigidTransform,
}

impl LeverArms {
    pub fn len(&self) -> usize {
        self.joints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.joints.is_empty()
    }
}

pub fn forward_kinematics(chain: &KinematicChain, state: &ArmState) -> Result<FrameSet> {
    state.check(chain)?;
    let mut frame = RigidTransform::identity();
    let mut joint_frames = Vec::with_capacity(chain.dof());
    for (joint, &q) in chain.joints.iter().zip(&state.q) {
        frame = frame * joint.parent_transform * RigidTransform::about_axis(&joint.axis, q);
        joint_frames.push(frame.checked()?);
    }
    let eelink_frame = (frame * chain.eelink_offset).checked()?;
    Ok(FrameSet {
        joint_frames,
        eelink_frame,
    })
}

pub fn lever_arms(chain: &KinematicChain, state: &ArmState) -> Result<LeverArms> {
    let frames = forward_kinematics(chain, state)?;
    let ee = *frames.eelink_frame.translation();
    let joints = frames
        .joint_frames
        .iter()
        .zip(&chain.joints)
        .map(|(frame, joint)| JointLever {
            axis: frame.transform_vector(&joint.axis),
            r_to_eelink: ee - frame.translation(),
        })
        .collect();
    Ok(LeverArms {
        joints,
        eelink_frame: frames.eelink_frame,
    })
}

/// Axial torque that gravity exerts on the sub-chain distal to each joint.
///
/// This is the torque the structure would feel, i.e. the negative of the
/// holding torque an actuator must supply.
pub fn self_gravity_torques(chain: &KinematicChain, state: &ArmState, gravity: &Vector3<f64>) -> Result<Vec<f64>> {
    let frames = forward_kinematics(chain, state)?;
    let coms: Vec<(Vector3<f64>, f64)> = frames
        .joint_frames
        .iter()
        .zip(&chain.joints)
        .map(|(frame, joint)| (frame.transform_point(&joint.link_com), joint.link_mass))
        .collect();

    let tau = frames
        .joint_frames
        .iter()
        .zip(&chain.joints)
        .enumerate()
        .map(|(i, (frame, joint))| {
            let origin = frame.translation();
            let axis = frame.transform_vector(&joint.axis);
            let moment: Vector3<f64> = coms[i..].iter().map(|(p, m)| (p - origin).cross(&(gravity * *m))).sum();
            axis.dot(&moment)
        })
        .collect();
    Ok(tau)
}

/// Gravitational potential of the arm links, `U = −Σ mⱼ g·pⱼ`.
pub fn potential_energy(chain: &KinematicChain, state: &ArmState, gravity: &Vector3<f64>) -> Result<f64> {
    let frames = forward_kinematics(chain, state)?;
    Ok(frames
        .joint_frames
        .iter()
        .zip(&chain.joints)
        .map(|(frame, joint)| -joint.link_mass * gravity.dot(&frame.transform_point(&joint.link_com)))
        .sum())
}

/// UR5-like six-axis arm built from its standard DH table, with the
/// manufacturer's nominal link masses and link centers at mid-link.
pub fn ur5_like() -> KinematicChain {
    use std::f64::consts::FRAC_PI_2;
    let d = [0.089159, 0.0, 0.0, 0.10915, 0.09465, 0.0823];
    let a = [0.0, -0.425, -0.39225, 0.0, 0.0, 0.0];
    let alpha = [FRAC_PI_2, 0.0, 0.0, FRAC_PI_2, -FRAC_PI_2, 0.0];
    let mass = [3.7, 8.393, 2.275, 1.219, 1.219, 0.1879];

    let joints = (0..6)
        .map(|i| {
            let parent = if i == 0 {
                RigidTransform::identity()
            } else {
                RigidTransform::from_xyz_rpy([a[i - 1], 0.0, d[i - 1]], [alpha[i - 1], 0.0, 0.0])
            };
            JointSpec::new(parent, Vector3::z(), mass[i], Vector3::new(a[i] / 2.0, 0.0, d[i] / 2.0))
                .expect("static joint table is valid")
        })
        .collect();
    let eelink = RigidTransform::from_xyz_rpy([a[5], 0.0, d[5]], [alpha[5], 0.0, 0.0]);
    KinematicChain::new(joints, eelink).expect("static chain is valid")
}

/// Torque-capture configuration for [`ur5_like`]: upper arm vertical, tool
/// pointing straight down (eelink z = world −z).
pub fn ur5_capture_state() -> ArmState {
    use std::f64::consts::FRAC_PI_2;
    let elbow = 20.0_f64.to_radians();
    ArmState::new(vec![0.0, -FRAC_PI_2, elbow, -elbow, -FRAC_PI_2, 0.0])
}
