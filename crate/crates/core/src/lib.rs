//! Center-of-mass estimation for grasped rods from joint-torque differences,
//! with the vision stand-ins, grasp simulator and experiment harness around it.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod harness;
pub mod kinematics;
pub mod scene;
pub mod sensing;
pub mod sim;
pub mod solver;
pub mod testkit;
pub mod transform;
pub mod vision;

pub use error::{Error, Result};
pub use kinematics::{ArmState, JointSpec, KinematicChain, LeverArms};
pub use scene::{CameraModel, GraspPose, ObjectTransform, RodObject, SceneObject};
pub use sensing::{NoiseSpec, PayloadTruth, Phase, TorqueSnapshot};
pub use sim::{LiftOutcome, Planner, SlipParams};
pub use solver::{ComEstimate, ObjectFrameCom, SolverConfig};
pub use transform::RigidTransform;
pub use vision::{MinAreaRect, OccupancyMask, SlipObservation};
