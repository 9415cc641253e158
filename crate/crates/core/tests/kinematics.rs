use std::f64::consts::{FRAC_PI_2, PI};

use arachne_core::kinematics::{
    compose, dh_transform, forward_kinematics, inverse_kinematics, normalize_angle, reachable, DhParams, FootPosition,
    IkBranch, JointAngles, LegGeometry,
};
use nalgebra::Matrix4;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The composed shoulder-to-foot matrix written out symbolically.
fn closed_form_leg(l: [f64; 3], q: [f64; 3]) -> Matrix4<f64> {
    let (s1, c1) = q[0].sin_cos();
    let (s2, c2) = q[1].sin_cos();
    let (s23, c23) = (q[1] + q[2]).sin_cos();
    let reach = l[0] + l[1] * c2 + l[2] * c23;
    let pz = l[1] * s2 + l[2] * s23;
    #[rustfmt::skip]
    let m = Matrix4::new(
        c1 * c23, -c1 * s23,  s1, c1 * reach,
        s1 * c23, -s1 * s23, -c1, s1 * reach,
        s23,       c23,      0.0, pz,
        0.0,       0.0,      0.0, 1.0,
    );
    m
}

fn angle_diff(a: f64, b: f64) -> f64 {
    normalize_angle(a - b).abs()
}

#[test]
fn composition_matches_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..1000 {
        let l = [
            rng.random_range(0.01..0.5),
            rng.random_range(0.01..0.5),
            rng.random_range(0.01..0.5),
        ];
        let q: [f64; 3] = std::array::from_fn(|_| rng.random_range(-PI..PI));
        let t = compose(
            &compose(
                &dh_transform(&DhParams::new(q[0], FRAC_PI_2, 0.0, l[0])),
                &dh_transform(&DhParams::new(q[1], 0.0, 0.0, l[1])),
            ),
            &dh_transform(&DhParams::new(q[2], 0.0, 0.0, l[2])),
        );
        let err = (t.matrix() - closed_form_leg(l, q)).amax();
        assert!(err <= 1e-12, "q={q:?} l={l:?} err={err}");

        let g = LegGeometry::unconstrained(l[0], l[1], l[2]).unwrap();
        let (fk, _) = forward_kinematics(&g, &JointAngles::new(q[0], q[1], q[2]));
        assert!((fk.matrix() - t.matrix()).amax() <= 1e-12);
        assert!(fk.is_valid(1e-12));
    }
}

#[test]
fn fk_of_ik_round_trips_random_targets() {
    let g = LegGeometry::unconstrained(0.05, 0.10, 0.10).unwrap();
    let tol = 1e-9 * g.total_length();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut tested = 0;
    let mut worst: f64 = 0.0;
    while tested < 10_000 {
        let target = FootPosition::new(
            rng.random_range(-0.26..0.26),
            rng.random_range(-0.26..0.26),
            rng.random_range(-0.21..0.21),
        );
        if !reachable(&g, &target) {
            continue;
        }
        for branch in IkBranch::BOTH {
            let q = inverse_kinematics(&g, &target, branch).unwrap();
            let (_, foot) = forward_kinematics(&g, &q);
            worst = worst.max(foot.distance(&target));
        }
        tested += 1;
    }
    assert!(worst <= tol, "worst round-trip error {worst}");
}

#[test]
fn ik_recovers_sampled_joint_angles() {
    let g = LegGeometry::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut tested = 0;
    while tested < 10_000 {
        let q: [f64; 3] = std::array::from_fn(|i| rng.random_range(g.limits[i].min..=g.limits[i].max));
        let q = JointAngles::new(q[0], q[1], q[2]);
        // a negative planar reach flips the bearing by pi; that target belongs to another q1
        let planar_reach = g.l1 + g.l2 * q.q2.cos() + g.l3 * (q.q2 + q.q3).cos();
        if planar_reach < 1e-3 {
            continue;
        }
        let (_, target) = forward_kinematics(&g, &q);
        let recovered = IkBranch::BOTH
            .iter()
            .any(|&b| match inverse_kinematics(&g, &target, b) {
                Ok(sol) => q
                    .as_array()
                    .iter()
                    .zip(sol.as_array())
                    .all(|(a, s)| angle_diff(*a, s) <= 1e-9),
                Err(_) => false,
            });
        assert!(recovered, "no branch recovered {q:?}");
        tested += 1;
    }
}

#[test]
fn reachable_agrees_with_fk_sweep() {
    // unequal pitch links leave a hole around the hip
    let g = LegGeometry::unconstrained(0.05, 0.10, 0.06).unwrap();
    let h = 0.005;
    let eps = 0.002;
    let n_rho = 50; // rho in (0, 0.25]
    let n_z = 81; // z in [-0.2, 0.2]
    let mut hit = vec![false; n_rho * n_z];

    let n = 1200;
    for i in 0..n {
        for j in 0..n {
            let q2 = -PI + 2.0 * PI * i as f64 / n as f64;
            let q3 = -PI + 2.0 * PI * j as f64 / n as f64;
            let (_, foot) = forward_kinematics(&g, &JointAngles::new(0.0, q2, q3));
            if foot.x <= 0.0 {
                continue;
            }
            let ir = (foot.x / h).round() as isize - 1;
            let iz = ((foot.z + 0.2) / h).round() as isize;
            for di in -1..=1 {
                for dj in -1..=1 {
                    let (a, b) = (ir + di, iz + dj);
                    if a < 0 || b < 0 || a >= n_rho as isize || b >= n_z as isize {
                        continue;
                    }
                    let rho = (a + 1) as f64 * h;
                    let z = -0.2 + b as f64 * h;
                    if (foot.x - rho).hypot(foot.z - z) <= eps {
                        hit[a as usize * n_z + b as usize] = true;
                    }
                }
            }
        }
    }

    let mut compared = 0;
    for a in 0..n_rho {
        for b in 0..n_z {
            let rho = (a + 1) as f64 * h;
            let z = -0.2 + b as f64 * h;
            let d = (rho - g.l1).hypot(z);
            let near_boundary = (d - (g.l2 + g.l3)).abs() < 2.0 * eps || (d - (g.l2 - g.l3).abs()).abs() < 2.0 * eps;
            if near_boundary {
                continue;
            }
            let expected = hit[a * n_z + b];
            assert_eq!(
                reachable(&g, &FootPosition::new(rho, 0.0, z)),
                expected,
                "rho={rho} z={z}"
            );
            compared += 1;
        }
    }
    assert!(compared > 3000);
}

proptest! {
    #[test]
    fn shoulder_rotation_shifts_only_q1(
        rho in 0.08f64..0.22,
        z in -0.12f64..0.05,
        bearing in -3.0f64..3.0,
        theta in -3.0f64..3.0,
    ) {
        let g = LegGeometry::unconstrained(0.05, 0.10, 0.10).unwrap();
        let t = FootPosition::new(rho * bearing.cos(), rho * bearing.sin(), z);
        let rotated = FootPosition::new(
            rho * (bearing + theta).cos(),
            rho * (bearing + theta).sin(),
            z,
        );
        prop_assume!(reachable(&g, &t));
        for branch in IkBranch::BOTH {
            let a = inverse_kinematics(&g, &t, branch).unwrap();
            let b = inverse_kinematics(&g, &rotated, branch).unwrap();
            prop_assert!(angle_diff(b.q1 - a.q1, theta) < 1e-9);
            prop_assert!(angle_diff(a.q2, b.q2) < 1e-9);
            prop_assert!(angle_diff(a.q3, b.q3) < 1e-9);
        }
    }

    #[test]
    fn q1_depends_only_on_bearing(
        px in -0.2f64..0.2,
        py in -0.2f64..0.2,
        lambda in 0.2f64..3.0,
        z in -0.1f64..0.0,
    ) {
        prop_assume!(px.hypot(py) > 1e-3);
        let g = LegGeometry::unconstrained(0.05, 0.10, 0.10).unwrap();
        let a = FootPosition::new(px, py, z);
        let b = FootPosition::new(lambda * px, lambda * py, z);
        prop_assume!(reachable(&g, &a) && reachable(&g, &b));
        let qa = inverse_kinematics(&g, &a, IkBranch::KneeUp).unwrap();
        let qb = inverse_kinematics(&g, &b, IkBranch::KneeUp).unwrap();
        prop_assert!(angle_diff(qa.q1, qb.q1) < 1e-12);
    }
}

/// Knee angle from `c / (2 l2 l3)` without removing the `l2^2` term folded into `c`.
fn unshifted_q3(g: &LegGeometry, t: &FootPosition, branch: IkBranch) -> f64 {
    let r = t.x.hypot(t.y) - g.l1;
    let c = r * r + t.z * t.z + g.l2 * g.l2 - g.l3 * g.l3;
    let s = if branch == IkBranch::KneeDown { 1.0 } else { -1.0 };
    s * (c / (2.0 * g.l2 * g.l3)).clamp(-1.0, 1.0).acos()
}

#[test]
fn unshifted_knee_cosine_misses_the_target() {
    let g = LegGeometry::unconstrained(0.05, 0.10, 0.10).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut tested, mut failed) = (0, 0);
    while tested < 1000 {
        let target = FootPosition::new(
            rng.random_range(0.02..0.26),
            rng.random_range(-0.2..0.2),
            rng.random_range(-0.2..0.2),
        );
        if !reachable(&g, &target) {
            continue;
        }
        tested += 1;
        let q = inverse_kinematics(&g, &target, IkBranch::KneeDown).unwrap();
        let bad = JointAngles::new(q.q1, q.q2, unshifted_q3(&g, &target, IkBranch::KneeDown));
        let (_, foot) = forward_kinematics(&g, &bad);
        if foot.distance(&target) > 1e-3 * g.total_length() {
            failed += 1;
        }
    }
    assert!(failed > 950, "{failed}/1000");
}
