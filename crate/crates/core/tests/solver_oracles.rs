use comgrasp::kinematics::{lever_arms, ur5_capture_state, ur5_like, STANDARD_GRAVITY};
use comgrasp::scene::ObjectTransform;
use comgrasp::sensing::{capture_after, capture_before, preset_sigma, NoiseSpec, PayloadTruth};
use comgrasp::solver::{
    project_to_object, residual, residual_gradient, solve_gd, solve_ls_oracle, ComEstimate, SolverConfig,
};
use comgrasp::testkit::{random_instance, random_transform, vertical_axis_instance};
use comgrasp::Error;
use nalgebra::{Vector2, Vector3};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Σ (a·((r + Δr) × g) + Δτ)² with the triple product written as a determinant.
fn oracle_residual(inst: &comgrasp::testkit::Instance, x: &Vector3<f64>) -> f64 {
    let rot = inst.arms.eelink_frame.rotation();
    let d = rot.column(0) * x[0] + rot.column(1) * x[1];
    let g = Vector3::new(0.0, 0.0, -x[2]);
    inst.arms
        .joints
        .iter()
        .zip(inst.after.tau.iter().zip(&inst.before.tau))
        .map(|(lever, (ta, tb))| {
            let a = lever.axis;
            let r = lever.r_to_eelink + d;
            let triple = a.x * (r.y * g.z - r.z * g.y) - a.y * (r.x * g.z - r.z * g.x) + a.z * (r.x * g.y - r.y * g.x);
            let e = triple + ta - tb;
            e * e
        })
        .sum()
}

#[test]
fn residual_matches_triple_product_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for seed in 0..200 {
        let inst = random_instance(seed, 0.02);
        let x = Vector3::new(
            rng.random_range(-0.3..0.3),
            rng.random_range(-0.3..0.3),
            rng.random_range(0.0..40.0),
        );
        let got = residual(&inst.before, &inst.after, &inst.arms, &x).unwrap();
        let want = oracle_residual(&inst, &x);
        assert!((got - want).abs() <= 1e-12 * want.max(1.0));
    }
}

#[test]
fn exact_capture_has_zero_residual_per_joint() {
    for seed in 0..200 {
        let inst = random_instance(seed, 0.0);
        let t = inst.truth;
        let r = residual(
            &inst.before,
            &inst.after,
            &inst.arms,
            &Vector3::new(t.delta_r.x, t.delta_r.y, t.weight),
        )
        .unwrap();
        // Sum of squares below (1e-12)² per joint.
        assert!(r < 6.0 * 1e-24, "seed {seed}: {r:e}");
    }
}

#[test]
fn gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let h = 1e-7;
    for seed in 0..100 {
        let inst = random_instance(seed, 0.01);
        let x = Vector3::new(
            rng.random_range(-0.3..0.3),
            rng.random_range(-0.3..0.3),
            rng.random_range(0.5..40.0),
        );
        let g = residual_gradient(&inst.before, &inst.after, &inst.arms, &x).unwrap();
        let mut fd = Vector3::zeros();
        for k in 0..3 {
            let mut p = x;
            let mut m = x;
            p[k] += h;
            m[k] -= h;
            fd[k] = (residual(&inst.before, &inst.after, &inst.arms, &p).unwrap()
                - residual(&inst.before, &inst.after, &inst.arms, &m).unwrap())
                / (2.0 * h);
        }
        let rel = (g - fd).norm() / g.norm().max(1e-12);
        assert!(rel < 1e-5, "seed {seed}: relative error {rel:e}");
    }
}

#[test]
fn gd_and_oracle_agree_on_random_instances() {
    for seed in 0..1000 {
        let inst = random_instance(seed, if seed % 2 == 0 { 0.0 } else { 0.02 });
        let gd = solve_gd(&inst.before, &inst.after, &inst.arms, &SolverConfig::default());
        let ls = solve_ls_oracle(&inst.before, &inst.after, &inst.arms);
        match (gd, ls) {
            (Ok(a), Ok(b)) => assert!((a.residual - b.residual).abs() < 1e-8, "seed {seed}"),
            (Err(Error::NonphysicalWeight { .. }), Err(Error::NonphysicalWeight { .. })) => {}
            (a, b) => panic!("seed {seed}: {a:?} vs {b:?}"),
        }
    }
}

#[test]
fn rank_deficient_instances_flagged_by_both() {
    for seed in 0..20 {
        let inst = vertical_axis_instance(seed);
        assert!(matches!(
            solve_gd(&inst.before, &inst.after, &inst.arms, &SolverConfig::default()),
            Err(Error::Unobservable { .. })
        ));
        assert!(matches!(
            solve_ls_oracle(&inst.before, &inst.after, &inst.arms),
            Err(Error::Unobservable { .. })
        ));
    }
}

#[test]
fn tight_gd_reaches_oracle_minimizer() {
    for seed in 0..200 {
        let inst = random_instance(seed, 0.0);
        let gd = solve_gd(&inst.before, &inst.after, &inst.arms, &SolverConfig::tight()).unwrap();
        let ls = solve_ls_oracle(&inst.before, &inst.after, &inst.arms).unwrap();
        assert!((gd.residual - ls.residual).abs() < 1e-8);
        assert!((gd.delta_r_xy - ls.delta_r_xy).norm() < 1e-6, "seed {seed}");
    }
}

#[test]
fn preset_noise_estimate_matches_oracle() {
    let chain = ur5_like();
    let q = ur5_capture_state();
    let sigma = preset_sigma(&chain, &q, &STANDARD_GRAVITY).unwrap();
    let arms = lever_arms(&chain, &q).unwrap();
    let truth = PayloadTruth {
        delta_r: Vector3::new(0.08, -0.03, 0.0),
        weight: 4.9,
    };
    for seed in 0..20 {
        let b = capture_before(&chain, &q, &STANDARD_GRAVITY, &NoiseSpec::new(sigma, 2 * seed).unwrap()).unwrap();
        let a = capture_after(
            &chain,
            &q,
            &STANDARD_GRAVITY,
            &truth,
            &NoiseSpec::new(sigma, 2 * seed + 1).unwrap(),
        )
        .unwrap();
        let gd = solve_gd(&b, &a, &arms, &SolverConfig::tight()).unwrap();
        let ls = solve_ls_oracle(&b, &a, &arms).unwrap();
        assert!((gd.delta_r_xy - ls.delta_r_xy).norm() < 1e-9);
        assert!((gd.weight - ls.weight).abs() < 1e-9, "{gd:?} {ls:?}");
    }
}

#[test]
fn doubling_weight_doubles_estimate() {
    let chain = ur5_like();
    let q = ur5_capture_state();
    let arms = lever_arms(&chain, &q).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..50 {
        let dr = Vector3::new(rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2), 0.0);
        let w = rng.random_range(1.0..20.0);
        let est = |weight: f64| {
            let truth = PayloadTruth { delta_r: dr, weight };
            let b = capture_before(&chain, &q, &STANDARD_GRAVITY, &NoiseSpec::none()).unwrap();
            let a = capture_after(&chain, &q, &STANDARD_GRAVITY, &truth, &NoiseSpec::none()).unwrap();
            solve_gd(&b, &a, &arms, &SolverConfig::tight()).unwrap()
        };
        let one = est(w);
        let two = est(2.0 * w);
        assert!((two.weight - 2.0 * one.weight).abs() < 1e-9);
        assert!((two.delta_r_xy - one.delta_r_xy).norm() < 1e-9);
    }
}

#[test]
fn capture_is_linear_in_payload_weight() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    for seed in 0..100 {
        let inst = random_instance(seed, 0.0);
        let dr = inst.truth.delta_r;
        let (g1, g2) = (rng.random_range(0.5..10.0), rng.random_range(0.5..10.0));
        let cap = |w: f64| {
            capture_after(
                &inst.chain,
                &inst.state,
                &STANDARD_GRAVITY,
                &PayloadTruth { delta_r: dr, weight: w },
                &NoiseSpec::none(),
            )
            .unwrap()
        };
        let (a1, a2, a12) = (cap(g1), cap(g2), cap(g1 + g2));
        for i in 0..6 {
            let sup = a1.tau[i] + a2.tau[i] - inst.before.tau[i];
            assert!((a12.tau[i] - sup).abs() < 1e-12);
        }
    }
}

/// Eliminate Δr_z from z_CoM = 0 and apply the full transform.
fn elimination_oracle(m: &ObjectTransform, dx: f64, dy: f64) -> f64 {
    let r = m.m.rotation();
    let p = m.m.translation();
    let dz = -(r[(2, 0)] * dx + r[(2, 1)] * dy + p.z) / r[(2, 2)];
    let h = m.m.to_homogeneous() * nalgebra::Vector4::new(dx, dy, dz, 1.0);
    assert!(h[2].abs() < 1e-9);
    h[0]
}

proptest! {
    #[test]
    fn closed_form_projection_matches_elimination(seed in any::<u64>(), dx in -0.3f64..0.3, dy in -0.3f64..0.3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = ObjectTransform::new(random_transform(&mut rng, 0.2));
        prop_assume!(m.r(3, 3).abs() > 0.05);
        let est = ComEstimate { delta_r_xy: Vector2::new(dx, dy), weight: 1.0, residual: 0.0, iterations: 0 };
        let got = project_to_object(&est, &m, f64::INFINITY).unwrap();
        let want = elimination_oracle(&m, dx, dy);
        prop_assert!((got.x_com_obj - want).abs() < 1e-10 * want.abs().max(1.0));
    }
}

#[test]
fn near_singular_transform_rejected() {
    let rot = nalgebra::Rotation3::from_euler_angles(std::f64::consts::FRAC_PI_2, 0.0, 0.0);
    let m = ObjectTransform::new(comgrasp::RigidTransform::from_rotation(rot));
    let est = ComEstimate {
        delta_r_xy: Vector2::new(0.1, 0.0),
        weight: 1.0,
        residual: 0.0,
        iterations: 0,
    };
    assert!(matches!(
        project_to_object(&est, &m, 1.0),
        Err(Error::NearSingularPose { .. })
    ));
}
