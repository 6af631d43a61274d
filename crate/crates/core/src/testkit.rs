//! Random instance generators shared by tests, benches and the acceptance suite.

use nalgebra::{Vector2, Vector3};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::kinematics::{lever_arms, ArmState, JointSpec, KinematicChain, LeverArms, STANDARD_GRAVITY};
use crate::sensing::{capture_after, capture_before, NoiseSpec, PayloadTruth, TorqueSnapshot};
use crate::transform::RigidTransform;

pub fn random_unit<R: Rng>(rng: &mut R) -> Vector3<f64> {
    loop {
        let v = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

pub fn random_transform<R: Rng>(rng: &mut R, reach: f64) -> RigidTransform {
    let pi = std::f64::consts::PI;
    RigidTransform::from_xyz_rpy(
        [
            rng.random_range(-reach..reach),
            rng.random_range(-reach..reach),
            rng.random_range(-reach..reach),
        ],
        [
            rng.random_range(-pi..pi),
            rng.random_range(-pi / 2.0..pi / 2.0),
            rng.random_range(-pi..pi),
        ],
    )
}

/// Arbitrary revolute chain with `dof` joints, link offsets up to 0.4 m.
pub fn random_chain<R: Rng>(rng: &mut R, dof: usize) -> KinematicChain {
    let joints = (0..dof)
        .map(|_| {
            JointSpec::new(
                random_transform(rng, 0.4),
                random_unit(rng),
                rng.random_range(0.1..8.0),
                Vector3::new(
                    rng.random_range(-0.2..0.2),
                    rng.random_range(-0.2..0.2),
                    rng.random_range(-0.2..0.2),
                ),
            )
            .expect("unit axis")
        })
        .collect();
    KinematicChain::new(joints, random_transform(rng, 0.15)).expect("non-empty chain")
}

pub fn random_state<R: Rng>(rng: &mut R, dof: usize) -> ArmState {
    let pi = std::f64::consts::PI;
    ArmState::new((0..dof).map(|_| rng.random_range(-pi..pi)).collect())
}

/// Payload with a horizontal offset in the eelink `xy` plane.
pub fn random_truth<R: Rng>(rng: &mut R) -> PayloadTruth {
    let xy = Vector2::new(rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2));
    PayloadTruth {
        delta_r: Vector3::new(xy.x, xy.y, 0.0),
        weight: rng.random_range(0.5..30.0),
    }
}

/// Before/after pair with its lever arms.
#[derive(Debug, Clone)]
pub struct Instance {
    pub chain: KinematicChain,
    pub state: ArmState,
    pub truth: PayloadTruth,
    pub before: TorqueSnapshot,
    pub after: TorqueSnapshot,
    pub arms: LeverArms,
}

pub fn capture_instance(
    chain: KinematicChain,
    state: ArmState,
    truth: PayloadTruth,
    sigma: f64,
    seed: u64,
) -> Result<Instance> {
    let before = capture_before(&chain, &state, &STANDARD_GRAVITY, &NoiseSpec::new(sigma, seed)?)?;
    let after = capture_after(
        &chain,
        &state,
        &STANDARD_GRAVITY,
        &truth,
        &NoiseSpec::new(sigma, seed.wrapping_add(0x9e37_79b9))?,
    )?;
    let arms = lever_arms(&chain, &state)?;
    Ok(Instance {
        chain,
        state,
        truth,
        before,
        after,
        arms,
    })
}

/// Random 6-DoF instance, zero noise unless `sigma > 0`.
pub fn random_instance(seed: u64, sigma: f64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chain = random_chain(&mut rng, 6);
    let state = random_state(&mut rng, 6);
    let truth = random_truth(&mut rng);
    capture_instance(chain, state, truth, sigma, seed).expect("valid random instance")
}

/// Chain whose axes are all vertical: no payload moment is visible.
pub fn vertical_axis_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dof = rng.random_range(3..=6);
    let joints = (0..dof)
        .map(|_| {
            JointSpec::new(
                RigidTransform::from_translation(Vector3::new(
                    rng.random_range(-0.4..0.4),
                    rng.random_range(-0.4..0.4),
                    rng.random_range(-0.2..0.2),
                )),
                Vector3::z(),
                rng.random_range(0.1..5.0),
                Vector3::new(rng.random_range(-0.2..0.2), 0.0, 0.0),
            )
            .expect("unit axis")
        })
        .collect();
    let chain = KinematicChain::new(joints, RigidTransform::from_translation(Vector3::new(0.1, 0.0, 0.0)))
        .expect("non-empty chain");
    let state = random_state(&mut rng, dof);
    let truth = random_truth(&mut rng);
    capture_instance(chain, state, truth, 0.0, seed).expect("valid instance")
}
