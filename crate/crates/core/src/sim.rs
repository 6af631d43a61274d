//! Quasi-static grasp simulation: lift, rotational and translational slip,
//! transport and drop detection.
//!
//! The rod pivots about the jaw line. While the gravity moment
//! `τ_g = G·|o|·cos θ` (with `o` the CoM distance from the contact point)
//! exceeds the rotational friction capacity `τ_f = μ·F·w_pad`, the tilt grows
//! at a rate proportional to the excess moment. The contact point slides
//! along the rod away from the CoM whenever `G·sin θ > μ·F`. The rod is
//! dropped once the tilt exceeds `theta_max` or the contact runs off an end.
//! Transport holds the worst-case static pose, modelled as a load factor on
//! gravity.

use std::io::Write;

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::kinematics::{lever_arms, ArmState, KinematicChain};
use crate::scene::{CameraModel, GraspPose, RodObject};
use crate::sensing::{capture_after, capture_before, NoiseSpec, PayloadTruth};
use crate::solver::{
    plan_regrasp, project_to_object, solve_gd, ComEstimate, ObjectFrameCom, RodPlacement, SolverConfig,
};
use crate::transform::RigidTransform;
use crate::vision::{eelink_to_object, observe_side, SlipObservation, SlipThresholds};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlipParams {
    /// Nominal friction coefficient.
    pub mu: f64,
    /// Relative half-range of the per-trial friction draw, `μ·(1 ± spread)`.
    pub mu_spread: f64,
    /// Effective contact lever of rotational friction, metres.
    pub pad_halfwidth: f64,
    pub theta_max: f64,
    pub dt: f64,
    /// Tilt rate per unit normalized excess moment, rad/s.
    pub slip_rate: f64,
    /// Slide speed per unit normalized excess axial force, m/s.
    pub slide_rate: f64,
    pub lift_duration: f64,
    pub transport_duration: f64,
    /// Gravity multiplier during transport.
    pub transport_load: f64,
}

impl SlipParams {
    pub fn preset() -> Self {
        Self {
            mu: 0.4,
            mu_spread: 0.5,
            pad_halfwidth: 0.008,
            theta_max: 45f64.to_radians(),
            dt: 1e-3,
            slip_rate: 40.0,
            slide_rate: 0.5,
            lift_duration: 2.0,
            transport_duration: 2.0,
            transport_load: 1.15,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mu", self.mu),
            ("pad_halfwidth", self.pad_halfwidth),
            ("theta_max", self.theta_max),
            ("dt", self.dt),
            ("slip_rate", self.slip_rate),
            ("slide_rate", self.slide_rate),
            ("transport_load", self.transport_load),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "slip parameter {name} must be positive, got {v}"
                )));
            }
        }
        if !(0.0..1.0).contains(&self.mu_spread) {
            return Err(Error::InvalidInput(format!(
                "mu_spread must lie in [0, 1), got {}",
                self.mu_spread
            )));
        }
        if !(self.lift_duration >= 0.0) || !(self.transport_duration >= 0.0) {
            return Err(Error::InvalidInput("durations must be ≥ 0".into()));
        }
        if self.theta_max >= std::f64::consts::FRAC_PI_2 {
            return Err(Error::InvalidInput("theta_max must be below π/2".into()));
        }
        Ok(())
    }

    /// Copy with the friction coefficient drawn uniformly from
    /// `μ·[1 − spread, 1 + spread]`.
    pub fn jittered<R: Rng>(&self, rng: &mut R) -> Self {
        let u: f64 = rng.random_range(-1.0..=1.0);
        Self {
            mu: self.mu * (1.0 + self.mu_spread * u),
            ..*self
        }
    }
}

impl Default for SlipParams {
    fn default() -> Self {
        Self::preset()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSample {
    pub t: f64,
    pub theta: f64,
    pub contact_offset: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiftOutcome {
    /// Tilt relative to the eelink, positive when the eelink `+x` end rises.
    pub final_theta: f64,
    /// Contact position along the rod's own axis, from its center.
    pub final_contact: f64,
    pub slipped: bool,
    pub dropped: bool,
    /// Integration stopped early because a slip threshold was crossed.
    pub halted: bool,
    pub trajectory: Vec<TraceSample>,
}

impl LiftOutcome {
    /// `t,theta,contact_offset` time series.
    pub fn write_trace<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,theta,contact_offset")?;
        for s in &self.trajectory {
            writeln!(out, "{:.4},{:.9},{:.9}", s.t, s.theta, s.contact_offset)?;
        }
        Ok(())
    }
}

/// Steps between stored trajectory samples.
const TRACE_STRIDE: usize = 10;

/// Signed +1/−1 for whether the eelink `x` axis follows the rod's own `+x`.
fn eelink_alignment(rod: &RodObject, grasp: &GraspPose) -> f64 {
    if grasp.rod_direction().dot(&rod.axis()) >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

fn check_grasp_on_rod(rod: &RodObject, grasp: &GraspPose) -> Result<f64> {
    let p = grasp.position();
    let local = rod.world_pose.inverse().transform_point(&p);
    let radial = (local.y * local.y + local.z * local.z).sqrt();
    if radial > rod.radius + 1e-9 || local.x.abs() > rod.length / 2.0 + 1e-9 {
        return Err(Error::InvalidInput(format!(
            "grasp is not on the rod (axial {:.4} m, radial {:.4} m)",
            local.x, radial
        )));
    }
    Ok(local.x)
}

#[derive(Debug, Clone, Copy)]
struct HoldState {
    t: f64,
    /// Unsigned rotation of the rod about the jaw line.
    phi: f64,
    contact: f64,
    slipped: bool,
    dropped: bool,
}

struct Integrator<'a> {
    rod: &'a RodObject,
    grasp: &'a GraspPose,
    params: &'a SlipParams,
    align: f64,
    contact0: f64,
    trajectory: Vec<TraceSample>,
}

impl<'a> Integrator<'a> {
    fn theta(&self, s: &HoldState) -> f64 {
        // The CoM side drops; a CoM toward eelink +x lowers the +x end.
        let side = self.align * (self.rod.com_offset - s.contact);
        if side > 0.0 {
            -s.phi
        } else {
            s.phi
        }
    }

    fn record(&mut self, s: &HoldState) {
        let sample = TraceSample {
            t: s.t,
            theta: self.theta(s),
            contact_offset: s.contact,
        };
        self.trajectory.push(sample);
    }

    /// Advances for `duration` under gravity scaled by `load`. Stops early
    /// when `monitor` thresholds are crossed and returns whether it did.
    fn run(&mut self, s: &mut HoldState, load: f64, duration: f64, monitor: Option<&SlipThresholds>) -> bool {
        let p = self.params;
        let weight = self.rod.weight(crate::kinematics::STANDARD_GRAVITY.norm()) * load;
        let friction_moment = p.mu * self.grasp.grip_force * p.pad_halfwidth;
        let friction_force = p.mu * self.grasp.grip_force;
        let steps = (duration / p.dt).round() as usize;
        for k in 1..=steps {
            if s.dropped {
                break;
            }
            let offset = self.rod.com_offset - s.contact;
            let tau_g = weight * offset.abs() * s.phi.cos();
            if tau_g > friction_moment {
                s.phi += p.dt * p.slip_rate * (tau_g - friction_moment) / (weight * self.rod.length);
                s.slipped = true;
            }
            let axial = weight * s.phi.sin();
            if axial > friction_force && offset != 0.0 {
                let ds = p.dt * p.slide_rate * (axial - friction_force) / weight;
                s.contact -= offset.signum() * ds;
                s.slipped = true;
            }
            s.t += p.dt;
            if s.phi > p.theta_max || s.contact.abs() > self.rod.length / 2.0 {
                s.dropped = true;
            }
            if k % TRACE_STRIDE == 0 || s.dropped {
                self.record(s);
            }
            if let Some(th) = monitor {
                if s.phi >= th.theta_slip || (s.contact - self.contact0).abs() >= th.slip_distance {
                    if k % TRACE_STRIDE != 0 && !s.dropped {
                        self.record(s);
                    }
                    return true;
                }
            }
        }
        false
    }

    fn outcome(&self, s: &HoldState, halted: bool) -> LiftOutcome {
        LiftOutcome {
            final_theta: self
                .theta(s)
                .clamp(-std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2),
            final_contact: s.contact,
            slipped: s.slipped,
            dropped: s.dropped,
            halted,
            trajectory: self.trajectory.clone(),
        }
    }
}

fn start<'a>(rod: &'a RodObject, grasp: &'a GraspPose, params: &'a SlipParams) -> Result<(Integrator<'a>, HoldState)> {
    params.validate()?;
    let contact0 = check_grasp_on_rod(rod, grasp)?;
    let mut integ = Integrator {
        rod,
        grasp,
        params,
        align: eelink_alignment(rod, grasp),
        contact0,
        trajectory: Vec::new(),
    };
    let s = HoldState {
        t: 0.0,
        phi: 0.0,
        contact: contact0,
        slipped: false,
        dropped: false,
    };
    integ.record(&s);
    Ok((integ, s))
}

/// Lift phase only.
pub fn simulate_lift(rod: &RodObject, grasp: &GraspPose, params: &SlipParams) -> Result<LiftOutcome> {
    let (mut integ, mut s) = start(rod, grasp, params)?;
    integ.run(&mut s, 1.0, params.lift_duration, None);
    Ok(integ.outcome(&s, false))
}

/// Lift that stops as soon as the tilt or contact drift crosses `monitor`.
pub fn simulate_monitored_lift(
    rod: &RodObject,
    grasp: &GraspPose,
    params: &SlipParams,
    monitor: &SlipThresholds,
) -> Result<LiftOutcome> {
    let (mut integ, mut s) = start(rod, grasp, params)?;
    let halted = integ.run(&mut s, 1.0, params.lift_duration, Some(monitor));
    Ok(integ.outcome(&s, halted && !s.dropped))
}

/// Lift followed by transport.
pub fn simulate_transfer(rod: &RodObject, grasp: &GraspPose, params: &SlipParams) -> Result<LiftOutcome> {
    let (mut integ, mut s) = start(rod, grasp, params)?;
    integ.run(&mut s, 1.0, params.lift_duration, None);
    integ.run(&mut s, params.transport_load, params.transport_duration, None);
    Ok(integ.outcome(&s, false))
}

/// Finishes a halted monitored lift and transports.
fn resume_transfer(
    rod: &RodObject,
    grasp: &GraspPose,
    params: &SlipParams,
    halted: &LiftOutcome,
) -> Result<LiftOutcome> {
    let (mut integ, _) = start(rod, grasp, params)?;
    let t = halted.trajectory.last().map_or(0.0, |s| s.t);
    let mut s = HoldState {
        t,
        phi: halted.final_theta.abs(),
        contact: halted.final_contact,
        slipped: halted.slipped,
        dropped: halted.dropped,
    };
    integ.trajectory = halted.trajectory.clone();
    integ.run(&mut s, 1.0, (params.lift_duration - t).max(0.0), None);
    integ.run(&mut s, params.transport_load, params.transport_duration, None);
    Ok(integ.outcome(&s, false))
}

/// Rotation about `y` by `angle`.
fn rot_y(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

/// eelink ← object while holding the rod at tilt `theta` with the jaws at
/// `contact` along the rod axis.
pub fn held_relative_pose(rod: &RodObject, grasp: &GraspPose, theta: f64, contact: f64) -> Result<RigidTransform> {
    let rel0 = grasp.eelink_frame().inverse() * rod.world_pose;
    let rotation = rot_y(theta) * rel0.rotation();
    let translation = -(rotation * Vector3::new(contact, 0.0, 0.0));
    RigidTransform::new(rotation, translation)
}

/// Side camera resolution and scale, metres per pixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SideCameraSpec {
    pub width: usize,
    pub height: usize,
    pub scale: f64,
}

impl Default for SideCameraSpec {
    fn default() -> Self {
        Self {
            width: 2048,
            height: 2048,
            scale: 0.0005,
        }
    }
}

/// Everything the estimation step needs besides the rod and the grasp.
#[derive(Debug, Clone)]
pub struct EstimationContext {
    pub chain: KinematicChain,
    pub capture_state: ArmState,
    pub gravity: Vector3<f64>,
    /// Per-joint torque noise standard deviation, N·m.
    pub sigma: f64,
    pub side_camera: SideCameraSpec,
    pub thresholds: SlipThresholds,
    pub solver: SolverConfig,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeldEstimate {
    pub observation: SlipObservation,
    pub estimate: ComEstimate,
    pub com: ObjectFrameCom,
    /// Generator truth in eelink coordinates at the capture pose.
    pub truth: PayloadTruth,
}

/// Holds the rod at the capture configuration in the given slip state,
/// captures a noisy torque pair, observes the side view and returns the CoM
/// estimate in the frame whose `+x` is `rod_axis` (world, as the rod lay on
/// the table).
pub fn estimate_held(
    ctx: &EstimationContext,
    rod: &RodObject,
    grasp: &GraspPose,
    theta: f64,
    contact: f64,
    rod_axis: &Vector3<f64>,
    seed: u64,
) -> Result<HeldEstimate> {
    let arms = lever_arms(&ctx.chain, &ctx.capture_state)?;
    let eelink = arms.eelink_frame;
    let rel = held_relative_pose(rod, grasp, theta, contact)?;
    let mut held = rod.clone();
    held.world_pose = eelink * rel;

    let truth = PayloadTruth {
        delta_r: rel.transform_point(&rod.com_local()),
        weight: rod.weight(ctx.gravity.norm()),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let before = capture_before(
        &ctx.chain,
        &ctx.capture_state,
        &ctx.gravity,
        &NoiseSpec::new(ctx.sigma, rng.random())?,
    )?;
    let after = capture_after(
        &ctx.chain,
        &ctx.capture_state,
        &ctx.gravity,
        &truth,
        &NoiseSpec::new(ctx.sigma, rng.random())?,
    )?;
    let estimate = solve_gd(&before, &after, &arms, &ctx.solver)?;

    let spec = ctx.side_camera;
    let camera = CameraModel::side_mounted(&eelink, spec.width, spec.height, spec.scale)?;
    let initial = check_grasp_on_rod(rod, grasp)? * eelink_alignment(rod, grasp);
    let observation = observe_side(&held, &camera, Some(initial), &ctx.thresholds)?;
    let m = eelink_to_object(&observation, &grasp.eelink_frame(), rod_axis)?;
    let com = project_to_object(&estimate, &m, rod.length / 2.0)?;
    Ok(HeldEstimate {
        observation,
        estimate,
        com,
        truth,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Planner {
    /// Geometric-center grasp, no estimation.
    Naive,
    /// Trial grasp, CoM estimation on slip, regrasp at the estimate.
    Regrasp,
}

impl Planner {
    pub fn as_str(&self) -> &'static str {
        match self {
            Planner::Naive => "naive",
            Planner::Regrasp => "regrasp",
        }
    }
}

impl std::fmt::Display for Planner {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Planner {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "naive" => Ok(Planner::Naive),
            "regrasp" => Ok(Planner::Regrasp),
            other => Err(format!("unknown planner `{other}` (expected `naive` or `regrasp`)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskOutcome {
    pub success: bool,
    pub trials_used: usize,
    /// Estimation result when the regrasp planner reacted to a slip.
    pub estimate: Option<HeldEstimate>,
}

/// One pick-and-place episode. `first_grasp` is the geometric-center grasp
/// derived from `placement`, the top-down view of the rod.
pub fn run_pick_place(
    ctx: &EstimationContext,
    rod: &RodObject,
    first_grasp: &GraspPose,
    placement: &RodPlacement,
    params: &SlipParams,
    planner: Planner,
    seed: u64,
) -> Result<TaskOutcome> {
    match planner {
        Planner::Naive => {
            let out = simulate_transfer(rod, first_grasp, params)?;
            Ok(TaskOutcome {
                success: !out.dropped,
                trials_used: 1,
                estimate: None,
            })
        }
        Planner::Regrasp => {
            let probe = simulate_monitored_lift(rod, first_grasp, params, &ctx.thresholds)?;
            if !probe.halted {
                let out = resume_transfer(rod, first_grasp, params, &probe)?;
                return Ok(TaskOutcome {
                    success: !out.dropped,
                    trials_used: 1,
                    estimate: None,
                });
            }
            let est = match estimate_held(
                ctx,
                rod,
                first_grasp,
                probe.final_theta,
                probe.final_contact,
                &placement.axis,
                seed,
            ) {
                Ok(e) => e,
                Err(e) => {
                    log::warn!("estimation failed after slip ({e}); keeping the first grasp");
                    let out = resume_transfer(rod, first_grasp, params, &probe)?;
                    return Ok(TaskOutcome {
                        success: !out.dropped,
                        trials_used: 1,
                        estimate: None,
                    });
                }
            };
            // The rod is put back where it was and grasped again.
            let regrasp = plan_regrasp(placement, &est.com, first_grasp.grip_force)?;
            let out = simulate_transfer(rod, &regrasp, params)?;
            Ok(TaskOutcome {
                success: !out.dropped,
                trials_used: 2,
                estimate: Some(est),
            })
        }
    }
}
