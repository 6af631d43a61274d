//! Fixtures shared by the benchmarks.

use comgrasp::kinematics::{lever_arms, ur5_capture_state, ur5_like, STANDARD_GRAVITY};
use comgrasp::scene::{table_pose, CameraModel, GraspPose, RodObject};
use comgrasp::sensing::{capture_after, capture_before, preset_sigma, NoiseSpec, PayloadTruth};
use comgrasp::vision::{render_mask, OccupancyMask};
use comgrasp::{LeverArms, TorqueSnapshot};
use nalgebra::{Vector2, Vector3};

/// 512×512 top-down mask holding two crossing rods.
pub fn wide_mask() -> OccupancyMask {
    let cam = CameraModel::top_down(Vector2::zeros(), 1.0, 512, 512, 0.001).expect("valid camera");
    let rods = [
        RodObject::new(0.6, 0.04, 1.0, 0.0, 0.04, table_pose(Vector2::zeros(), 0.7, 0.04)).expect("valid rod"),
        RodObject::new(
            0.3,
            0.06,
            1.0,
            0.0,
            0.06,
            table_pose(Vector2::new(0.05, -0.1), -0.4, 0.06),
        )
        .expect("valid rod"),
    ];
    render_mask(&rods, &cam).expect("rods are in view")
}

/// Noisy torque pair at the UR5-like capture pose.
pub fn ur5_capture() -> (TorqueSnapshot, TorqueSnapshot, LeverArms) {
    let chain = ur5_like();
    let q = ur5_capture_state();
    let sigma = preset_sigma(&chain, &q, &STANDARD_GRAVITY).expect("valid chain");
    let truth = PayloadTruth {
        delta_r: Vector3::new(0.08, -0.03, 0.0),
        weight: 4.9,
    };
    let before = capture_before(
        &chain,
        &q,
        &STANDARD_GRAVITY,
        &NoiseSpec::new(sigma, 1).expect("sigma ≥ 0"),
    )
    .expect("valid capture");
    let after = capture_after(
        &chain,
        &q,
        &STANDARD_GRAVITY,
        &truth,
        &NoiseSpec::new(sigma, 2).expect("sigma ≥ 0"),
    )
    .expect("valid capture");
    let arms = lever_arms(&chain, &q).expect("valid chain");
    (before, after, arms)
}

/// A heavy rod grasped off its CoM so the lift slips.
pub fn slipping_grasp() -> (RodObject, GraspPose) {
    let rod = RodObject::new(
        0.5,
        0.01,
        1.6,
        0.15,
        0.01,
        table_pose(Vector2::new(0.5, 0.0), 0.3, 0.01),
    )
    .expect("valid rod");
    let p = rod.world_pose.transform_point(&Vector3::new(-0.05, 0.0, 0.0));
    let grasp = GraspPose::new(p.x, p.y, p.z, rod.yaw() + std::f64::consts::FRAC_PI_2, 400.0).expect("valid grasp");
    (rod, grasp)
}
