//! Payload CoM estimation from before/after torque differences.
//!
//! For each joint `i` the static balance, projected on the joint axis, reads
//!
//! ```text
//! a_i · ((r_i + Δr) × G) + τ_after_i − τ_before_i = 0
//! ```
//!
//! with `Δr = Δr_x·x_ee + Δr_y·y_ee` (the component along the eelink `z`
//! axis is dropped) and `G = (0, 0, −G_o)`. [`solve_gd`] minimizes the sum of
//! squared violations over `(Δr_x, Δr_y, G_o)` by gradient descent in that
//! bilinear parametrization. [`solve_ls_oracle`] is an independent check:
//! with `(u, v, w) = (G_o·Δr_x, G_o·Δr_y, G_o)` the problem is linear and is
//! solved through the normal equations.

use nalgebra::{DMatrix, Matrix3, Vector2, Vector3};

use crate::error::{Error, Result};
use crate::kinematics::LeverArms;
use crate::scene::{GraspPose, ObjectTransform};
use crate::sensing::{check_pair, TorqueSnapshot, WEIGHT_DIRECTION};
use crate::transform::wrap_angle;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComEstimate {
    /// `(Δr_x, Δr_y)` in the eelink frame, metres.
    pub delta_r_xy: Vector2<f64>,
    /// Payload weight `G_o`, newtons.
    pub weight: f64,
    /// Final objective value, N²·m².
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// First step length; later steps use Barzilai–Borwein lengths when
    /// backtracking is on.
    pub learning_rate: f64,
    pub max_iterations: usize,
    /// Stop once accepted steps keep lowering the objective by less than
    /// this. Zero disables the test.
    pub convergence_tol: f64,
    /// Stop once the gradient norm drops to this value.
    pub gradient_tol: f64,
    /// Halve the step on any objective increase. When off, a fixed step is
    /// used and ten consecutive increases abort with [`Error::Divergence`].
    pub backtracking: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-2,
            max_iterations: 10_000,
            convergence_tol: 1e-14,
            gradient_tol: 0.0,
            backtracking: true,
        }
    }
}

impl SolverConfig {
    /// Runs until the step can no longer decrease the objective.
    pub fn tight() -> Self {
        Self {
            max_iterations: 100_000,
            convergence_tol: 0.0,
            gradient_tol: 1e-15,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::InvalidInput(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidInput("max_iterations must be ≥ 1".into()));
        }
        if !(self.convergence_tol >= 0.0) || !(self.gradient_tol >= 0.0) {
            return Err(Error::InvalidInput("tolerances must be ≥ 0".into()));
        }
        Ok(())
    }
}

/// CoM position along the rod axis in the object frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectFrameCom {
    pub x_com_obj: f64,
    /// Set when the raw value fell outside the rod and was clamped.
    pub out_of_range: bool,
}

/// Validated view over a snapshot pair and its lever arms.
struct Problem<'a> {
    arms: &'a LeverArms,
    delta_tau: Vec<f64>,
    ee_x: Vector3<f64>,
    ee_y: Vector3<f64>,
}

impl<'a> Problem<'a> {
    fn new(before: &TorqueSnapshot, after: &TorqueSnapshot, arms: &'a LeverArms) -> Result<Self> {
        check_pair(before, after)?;
        if arms.len() != before.tau.len() {
            return Err(Error::DimensionMismatch {
                expected: arms.len(),
                got: before.tau.len(),
            });
        }
        let rot = arms.eelink_frame.rotation();
        Ok(Self {
            arms,
            delta_tau: after.tau.iter().zip(&before.tau).map(|(a, b)| a - b).collect(),
            ee_x: rot.column(0).into_owned(),
            ee_y: rot.column(1).into_owned(),
        })
    }

    /// Objective and its gradient at `x = (Δr_x, Δr_y, G_o)`.
    fn eval(&self, x: &Vector3<f64>) -> (f64, Vector3<f64>) {
        let (f, g, _) = self.eval_scaled(x);
        (f, g)
    }

    /// Also returns the diagonal of `JᵀJ` for the residual Jacobian `J`.
    fn eval_scaled(&self, x: &Vector3<f64>) -> (f64, Vector3<f64>, Vector3<f64>) {
        let offset = self.ee_x * x[0] + self.ee_y * x[1];
        let force = WEIGHT_DIRECTION * x[2];
        let mut f = 0.0;
        let mut grad = Vector3::zeros();
        let mut diag = Vector3::zeros();
        for (lever, dt) in self.arms.joints.iter().zip(&self.delta_tau) {
            let arm = lever.r_to_eelink + offset;
            let e = lever.axis.dot(&arm.cross(&force)) + dt;
            let de = Vector3::new(
                x[2] * lever.axis.dot(&self.ee_x.cross(&WEIGHT_DIRECTION)),
                x[2] * lever.axis.dot(&self.ee_y.cross(&WEIGHT_DIRECTION)),
                lever.axis.dot(&arm.cross(&WEIGHT_DIRECTION)),
            );
            f += e * e;
            grad += de * (2.0 * e);
            diag += de.component_mul(&de);
        }
        (f, grad, diag)
    }
}

/// Sum of squared per-joint balance violations for a candidate
/// `(Δr_x, Δr_y, G_o)`.
pub fn residual(
    before: &TorqueSnapshot,
    after: &TorqueSnapshot,
    arms: &LeverArms,
    candidate: &Vector3<f64>,
) -> Result<f64> {
    Ok(Problem::new(before, after, arms)?.eval(candidate).0)
}

/// Analytic gradient of [`residual`].
pub fn residual_gradient(
    before: &TorqueSnapshot,
    after: &TorqueSnapshot,
    arms: &LeverArms,
    candidate: &Vector3<f64>,
) -> Result<Vector3<f64>> {
    Ok(Problem::new(before, after, arms)?.eval(candidate).1)
}

/// Linear design `J` with rows `[x_ee·(w × a_i), y_ee·(w × a_i), a_i·(r_i × w)]`
/// for unknowns `(u, v, w) = (G_o·Δr_x, G_o·Δr_y, G_o)`, `w` being the
/// weight direction. The balance reads `J·θ = −Δτ`.
pub fn design_matrix(arms: &LeverArms) -> DMatrix<f64> {
    let rot = arms.eelink_frame.rotation();
    let (ex, ey) = (rot.column(0), rot.column(1));
    let w = WEIGHT_DIRECTION;
    DMatrix::from_fn(arms.len(), 3, |i, j| {
        let lever = &arms.joints[i];
        let wxa = w.cross(&lever.axis);
        match j {
            0 => ex.dot(&wxa),
            1 => ey.dot(&wxa),
            _ => {
                let r = lever.r_to_eelink;
                let a = lever.axis;
                // a·(r × w) written out as a determinant.
                a.x * (r.y * w.z - r.z * w.y) + a.y * (r.z * w.x - r.x * w.z) + a.z * (r.x * w.y - r.y * w.x)
            }
        }
    })
}

/// Numerical rank of the design, relative threshold 1e-9 on singular values.
pub fn design_rank(arms: &LeverArms) -> usize {
    let j = design_matrix(arms);
    if j.nrows() == 0 {
        return 0;
    }
    let sv = j.svd(false, false).singular_values;
    let max = sv.iter().fold(0.0_f64, |m, s| m.max(*s));
    if max < 1e-12 {
        return 0;
    }
    sv.iter().filter(|s| **s > 1e-9 * max).count()
}

fn check_observable(arms: &LeverArms) -> Result<()> {
    if arms.len() < 3 {
        return Err(Error::Unobservable {
            rank: arms.len().min(design_rank(arms)),
        });
    }
    let rank = design_rank(arms);
    if rank < 3 {
        return Err(Error::Unobservable { rank });
    }
    Ok(())
}

const STALL_WINDOW: usize = 10;
const HISTORY: usize = 10;
/// Relative objective change treated as rounding noise.
const FLAT_TOL: f64 = 1e-12;

/// Gradient descent on `(Δr_x, Δr_y, G_o)` starting from
/// `(0, 0, ‖Δτ‖ / ‖mean lever arm‖)`.
pub fn solve_gd(
    before: &TorqueSnapshot,
    after: &TorqueSnapshot,
    arms: &LeverArms,
    config: &SolverConfig,
) -> Result<ComEstimate> {
    config.validate()?;
    let problem = Problem::new(before, after, arms)?;
    check_observable(arms)?;

    let dt_norm = problem.delta_tau.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mean_arm: Vector3<f64> = arms.joints.iter().map(|j| j.r_to_eelink).sum::<Vector3<f64>>() / arms.len() as f64;
    let init_weight = if mean_arm.norm() > 1e-9 && dt_norm > 0.0 {
        dt_norm / mean_arm.norm()
    } else {
        1.0
    };

    let mut x = Vector3::new(0.0, 0.0, init_weight);
    let (mut f, mut g, mut diag) = problem.eval_scaled(&x);
    let mut step = config.learning_rate;
    let mut increases = 0usize;
    let mut stalled = 0usize;
    let mut iterations = 0usize;
    let mut history = std::collections::VecDeque::with_capacity(HISTORY);
    let mut best = (x, f, g.norm());

    while iterations < config.max_iterations {
        if g.norm() <= config.gradient_tol {
            break;
        }
        iterations += 1;

        if config.backtracking {
            // Gradient scaled by the Gauss–Newton diagonal; the unknowns
            // differ by orders of magnitude in curvature.
            let scale = diag.map(|d| if d > 0.0 { 1.0 / d } else { 1.0 });
            let dir = -g.component_mul(&scale);
            let mut x_new = x + dir * step;
            let (mut f_new, mut g_new, mut diag_new) = problem.eval_scaled(&x_new);
            // Non-monotone acceptance against the worst of the recent values
            // lets Barzilai–Borwein steps cross narrow valleys.
            let reference = history.iter().fold(f, |m, v| m.max(*v));
            // Near the minimum the objective stops resolving progress before
            // the gradient does; a step that keeps the objective level within
            // rounding and shrinks the gradient is also taken.
            let flat = FLAT_TOL * f;
            let g_norm = g.norm();
            let accept =
                |f_new: f64, g_new: &Vector3<f64>| f_new < reference || (f_new <= f + flat && g_new.norm() < g_norm);
            let mut halvings = 0;
            while !accept(f_new, &g_new) && halvings < 200 {
                step *= 0.5;
                halvings += 1;
                x_new = x + dir * step;
                (f_new, g_new, diag_new) = problem.eval_scaled(&x_new);
            }
            if !accept(f_new, &g_new) {
                break;
            }
            let s = x_new - x;
            let y = g_new - g;
            let sy = s.dot(&y);
            let s_metric = s.component_mul(&s).dot(&diag);
            step = if sy > 0.0 { s_metric / sy } else { step * 2.0 };
            x = x_new;
            f = f_new;
            g = g_new;
            diag = diag_new;
            if history.len() == HISTORY {
                history.pop_front();
            }
            history.push_back(f);
            let level = FLAT_TOL * best.1;
            let improved = f < best.1 - level || (f <= best.1 + level && g.norm() < best.2);
            if improved {
                let decrease = best.1 - f;
                best = (x, f, g.norm());
                if config.convergence_tol > 0.0 && decrease < config.convergence_tol {
                    stalled += 1;
                } else {
                    stalled = 0;
                }
            }
            if stalled >= STALL_WINDOW {
                break;
            }
        } else {
            let x_new = x - g * step;
            let (f_new, g_new) = problem.eval(&x_new);
            if !f_new.is_finite() {
                return Err(Error::Divergence { iterations });
            }
            if f_new > f {
                increases += 1;
                if increases >= 10 {
                    return Err(Error::Divergence { iterations });
                }
            } else {
                increases = 0;
            }
            let decrease = f - f_new;
            x = x_new;
            f = f_new;
            g = g_new;
            if (0.0..config.convergence_tol).contains(&decrease) {
                break;
            }
        }
    }

    if config.backtracking {
        (x, f) = (best.0, best.1);
    }
    if !(x[2] > 0.0) {
        return Err(Error::NonphysicalWeight { weight: x[2] });
    }
    Ok(ComEstimate {
        delta_r_xy: Vector2::new(x[0], x[1]),
        weight: x[2],
        residual: f,
        iterations,
    })
}

/// Global minimizer through the linear reparametrization and normal equations.
pub fn solve_ls_oracle(before: &TorqueSnapshot, after: &TorqueSnapshot, arms: &LeverArms) -> Result<ComEstimate> {
    let problem = Problem::new(before, after, arms)?;
    check_observable(arms)?;
    let j = design_matrix(arms);
    let rhs = nalgebra::DVector::from_iterator(problem.delta_tau.len(), problem.delta_tau.iter().map(|v| -v));
    let jt = j.transpose();
    let normal: Matrix3<f64> = (&jt * &j).fixed_view::<3, 3>(0, 0).into_owned();
    let b: Vector3<f64> = (&jt * &rhs).fixed_view::<3, 1>(0, 0).into_owned();
    let theta = normal.cholesky().map(|c| c.solve(&b)).ok_or(Error::Unobservable {
        rank: design_rank(arms),
    })?;
    let weight = theta[2];
    if !(weight > 0.0) {
        return Err(Error::NonphysicalWeight { weight });
    }
    let fit = &j * nalgebra::DVector::from_column_slice(theta.as_slice()) - &rhs;
    Ok(ComEstimate {
        delta_r_xy: Vector2::new(theta[0] / weight, theta[1] / weight),
        weight,
        residual: fit.norm_squared(),
        iterations: 0,
    })
}

/// CoM coordinate along the rod axis in the object frame, assuming the CoM
/// lies on the rod axis (`z_CoM = 0`), which fixes the unobserved `Δr_z`:
///
/// ```text
/// x = (r11 r33 − r13 r31)/r33 · Δr_x + (r12 r33 − r13 r32)/r33 · Δr_y + p_x − r13/r33 · p_z
/// ```
///
/// The result is clamped to `±half_length`.
pub fn project_to_object(est: &ComEstimate, m: &ObjectTransform, half_length: f64) -> Result<ObjectFrameCom> {
    let r33 = m.check_r33()?;
    let r = |i, j| m.r(i, j);
    let p = m.p();
    let (dx, dy) = (est.delta_r_xy.x, est.delta_r_xy.y);
    let raw = (r(1, 1) * r33 - r(1, 3) * r(3, 1)) / r33 * dx + (r(1, 2) * r33 - r(1, 3) * r(3, 2)) / r33 * dy + p.x
        - r(1, 3) / r33 * p.z;
    let clamped = raw.clamp(-half_length, half_length);
    Ok(ObjectFrameCom {
        x_com_obj: clamped,
        out_of_range: clamped != raw,
    })
}

/// Rod posture on the table used by the regrasp planner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RodPlacement {
    /// Geometric center at axis height.
    pub center: Vector3<f64>,
    /// Horizontal unit vector along the object-frame `+x` axis.
    pub axis: Vector3<f64>,
}

/// Grasp at the estimated CoM: the geometric center displaced by
/// `x_com_obj` along the rod axis, jaws perpendicular to the rod.
pub fn plan_regrasp(placement: &RodPlacement, com: &ObjectFrameCom, grip_force: f64) -> Result<GraspPose> {
    if com.out_of_range {
        log::warn!(
            "estimated CoM fell outside the rod; regrasping at the clamped end point {:.4} m",
            com.x_com_obj
        );
    }
    let axis = placement.axis / placement.axis.norm();
    let p = placement.center + axis * com.x_com_obj;
    GraspPose::new(
        p.x,
        p.y,
        p.z,
        wrap_angle(axis.y.atan2(axis.x) + std::f64::consts::FRAC_PI_2),
        grip_force,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::{
        lever_arms, ur5_capture_state, ur5_like, ArmState, JointSpec, KinematicChain, STANDARD_GRAVITY,
    };
    use crate::sensing::{capture_after, capture_before, NoiseSpec, PayloadTruth};
    use crate::transform::RigidTransform;

    fn ur5_pair(truth: PayloadTruth, noise: f64) -> (TorqueSnapshot, TorqueSnapshot, LeverArms) {
        let chain = ur5_like();
        let q = ur5_capture_state();
        let before = capture_before(&chain, &q, &STANDARD_GRAVITY, &NoiseSpec::new(noise, 1).unwrap()).unwrap();
        let after = capture_after(
            &chain,
            &q,
            &STANDARD_GRAVITY,
            &truth,
            &NoiseSpec::new(noise, 2).unwrap(),
        )
        .unwrap();
        (before, after, lever_arms(&chain, &q).unwrap())
    }

    #[test]
    fn residual_zero_at_truth() {
        let truth = PayloadTruth {
            delta_r: Vector3::new(0.08, -0.03, 0.0),
            weight: 4.9,
        };
        let (b, a, arms) = ur5_pair(truth, 0.0);
        let r = residual(&b, &a, &arms, &Vector3::new(0.08, -0.03, 4.9)).unwrap();
        assert!(r < 1e-24, "{r}");
    }

    #[test]
    fn null_model_residual_is_torque_energy() {
        let truth = PayloadTruth {
            delta_r: Vector3::new(0.05, 0.02, 0.0),
            weight: 7.0,
        };
        let (b, a, arms) = ur5_pair(truth, 0.0);
        let energy: f64 = a.tau.iter().zip(&b.tau).map(|(x, y)| (x - y) * (x - y)).sum();
        let r = residual(&b, &a, &arms, &Vector3::new(0.3, -0.2, 0.0)).unwrap();
        assert!((r - energy).abs() <= 1e-12 * energy.max(1.0));
    }

    #[test]
    fn recovers_exact_payload() {
        let truth = PayloadTruth {
            delta_r: Vector3::new(0.08, -0.03, 0.0),
            weight: 4.9,
        };
        let (b, a, arms) = ur5_pair(truth, 0.0);
        let est = solve_gd(&b, &a, &arms, &SolverConfig::default()).unwrap();
        assert!((est.delta_r_xy - Vector2::new(0.08, -0.03)).norm() < 1e-6, "{est:?}");
        assert!((est.weight - 4.9).abs() < 1e-6, "{est:?}");
        let oracle = solve_ls_oracle(&b, &a, &arms).unwrap();
        assert!((oracle.delta_r_xy - Vector2::new(0.08, -0.03)).norm() < 1e-10);
        assert!((oracle.weight - 4.9).abs() < 1e-10);
    }

    #[test]
    fn centered_payload() {
        let truth = PayloadTruth {
            delta_r: Vector3::zeros(),
            weight: 0.8 * 9.81,
        };
        let (b, a, arms) = ur5_pair(truth, 0.0);
        let est = solve_gd(&b, &a, &arms, &SolverConfig::default()).unwrap();
        assert!(est.delta_r_xy.norm() < 1e-6);
        assert!((est.weight - 0.8 * 9.81).abs() < 1e-6);
    }

    #[test]
    fn dropped_z_component_is_ignored() {
        // At the capture pose eelink z is vertical, so Δr_z has no moment.
        let truth = PayloadTruth {
            delta_r: Vector3::new(0.1, 0.02, 0.07),
            weight: 6.0,
        };
        let (b, a, arms) = ur5_pair(truth, 0.0);
        let est = solve_ls_oracle(&b, &a, &arms).unwrap();
        assert!((est.delta_r_xy - Vector2::new(0.1, 0.02)).norm() < 1e-10);
    }

    #[test]
    fn vertical_axes_are_unobservable() {
        let joints = (0..4)
            .map(|k| {
                JointSpec::new(
                    RigidTransform::from_translation(Vector3::new(if k == 0 { 0.0 } else { 0.3 }, 0.0, 0.0)),
                    Vector3::z(),
                    1.0,
                    Vector3::new(0.15, 0.0, 0.0),
                )
                .unwrap()
            })
            .collect();
        let chain = KinematicChain::new(joints, RigidTransform::from_translation(Vector3::new(0.2, 0.0, 0.0))).unwrap();
        let q = ArmState::zeros(4);
        let truth = PayloadTruth {
            delta_r: Vector3::new(0.05, 0.0, 0.0),
            weight: 3.0,
        };
        let b = capture_before(&chain, &q, &STANDARD_GRAVITY, &NoiseSpec::none()).unwrap();
        let a = capture_after(&chain, &q, &STANDARD_GRAVITY, &truth, &NoiseSpec::none()).unwrap();
        let arms = lever_arms(&chain, &q).unwrap();
        assert_eq!(design_rank(&arms), 0);
        assert!(matches!(
            solve_gd(&b, &a, &arms, &SolverConfig::default()),
            Err(Error::Unobservable { .. })
        ));
        assert!(matches!(
            solve_ls_oracle(&b, &a, &arms),
            Err(Error::Unobservable { .. })
        ));
    }

    #[test]
    fn fixed_large_step_diverges() {
        let truth = PayloadTruth {
            delta_r: Vector3::new(0.08, -0.03, 0.0),
            weight: 4.9,
        };
        let (b, a, arms) = ur5_pair(truth, 0.0);
        let cfg = SolverConfig {
            learning_rate: 5.0,
            backtracking: false,
            ..SolverConfig::default()
        };
        assert!(matches!(solve_gd(&b, &a, &arms, &cfg), Err(Error::Divergence { .. })));
    }

    #[test]
    fn invalid_config_rejected() {
        let truth = PayloadTruth {
            delta_r: Vector3::zeros(),
            weight: 1.0,
        };
        let (b, a, arms) = ur5_pair(truth, 0.0);
        let cfg = SolverConfig {
            learning_rate: 0.0,
            ..SolverConfig::default()
        };
        assert!(solve_gd(&b, &a, &arms, &cfg).is_err());
        let cfg = SolverConfig {
            max_iterations: 0,
            ..SolverConfig::default()
        };
        assert!(solve_gd(&b, &a, &arms, &cfg).is_err());
    }

    #[test]
    fn mismatched_pair_rejected() {
        let truth = PayloadTruth {
            delta_r: Vector3::zeros(),
            weight: 1.0,
        };
        let (b, mut a, arms) = ur5_pair(truth, 0.0);
        a.state.q[2] += 0.01;
        assert!(residual(&b, &a, &arms, &Vector3::zeros()).is_err());
    }

    #[test]
    fn identity_projection() {
        let est = ComEstimate {
            delta_r_xy: Vector2::new(0.07, 0.01),
            weight: 1.0,
            residual: 0.0,
            iterations: 0,
        };
        let m = ObjectTransform::new(RigidTransform::identity());
        let com = project_to_object(&est, &m, 0.5).unwrap();
        assert_eq!(com.x_com_obj, 0.07);
        assert!(!com.out_of_range);
    }

    #[test]
    fn translated_projection() {
        let est = ComEstimate {
            delta_r_xy: Vector2::new(0.02, 0.05),
            weight: 1.0,
            residual: 0.0,
            iterations: 0,
        };
        let m = ObjectTransform::new(RigidTransform::from_translation(Vector3::new(0.1, 0.0, 0.0)));
        let com = project_to_object(&est, &m, 0.5).unwrap();
        assert!((com.x_com_obj - 0.12).abs() < 1e-15);
    }

    #[test]
    fn projection_clamps_to_rod() {
        let est = ComEstimate {
            delta_r_xy: Vector2::new(0.4, 0.0),
            weight: 1.0,
            residual: 0.0,
            iterations: 0,
        };
        let m = ObjectTransform::new(RigidTransform::identity());
        let com = project_to_object(&est, &m, 0.2).unwrap();
        assert_eq!(com.x_com_obj, 0.2);
        assert!(com.out_of_range);
    }

    #[test]
    fn regrasp_at_center_and_offset() {
        let placement = RodPlacement {
            center: Vector3::new(0.4, 0.1, 0.02),
            axis: Vector3::x(),
        };
        let g0 = plan_regrasp(
            &placement,
            &ObjectFrameCom {
                x_com_obj: 0.0,
                out_of_range: false,
            },
            12.0,
        )
        .unwrap();
        assert!((g0.position() - placement.center).norm() < 1e-15);
        assert!((g0.yaw - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert_eq!(g0.grip_force, 12.0);
        let g1 = plan_regrasp(
            &placement,
            &ObjectFrameCom {
                x_com_obj: 0.1,
                out_of_range: false,
            },
            12.0,
        )
        .unwrap();
        assert!((g1.position() - Vector3::new(0.5, 0.1, 0.02)).norm() < 1e-15);
    }
}
