use arachne_core::gait::{
    foot_trajectory, joint_trace, plan_cycle, Direction, GaitConfig, GaitPlan, LegId, FORWARD_SEQUENCE,
};
use arachne_core::kinematics::{forward_kinematics, inverse_kinematics, reachable, FootPosition, LegGeometry};
use nalgebra::{Rotation2, Vector2, Vector3};

const SAMPLES: usize = 40;

fn plans() -> Vec<GaitPlan> {
    let cfg = GaitConfig::default();
    let g = LegGeometry::default();
    Direction::ALL
        .iter()
        .map(|&d| plan_cycle(&cfg, &g, d).unwrap())
        .collect()
}

fn is_cyclic_rotation(seq: &[LegId], pattern: &[LegId; 4]) -> bool {
    (0..4).any(|shift| seq.iter().enumerate().all(|(i, l)| *l == pattern[(i + shift) % 4]))
}

#[test]
fn one_swing_leg_at_every_sample() {
    for plan in plans() {
        let ground = -plan.config.body_height;
        for cycle in 0..10 {
            for phase in 0..4 {
                let swinging: Vec<_> = LegId::ALL
                    .iter()
                    .filter(|&&l| plan.is_swinging(l, cycle * 4 + phase))
                    .collect();
                assert_eq!(swinging.len(), 1);
                for i in 1..SAMPLES {
                    let s = i as f64 / SAMPLES as f64;
                    let lifted = LegId::ALL
                        .iter()
                        .filter(|&&l| plan.foot_in_body(l, phase, s).z > ground)
                        .count();
                    assert_eq!(lifted, 1, "{:?} phase {phase} s {s}", plan.direction);
                }
            }
        }
    }
}

#[test]
fn forward_order_is_the_crawl_sequence() {
    let plan = plan_cycle(&GaitConfig::default(), &LegGeometry::default(), Direction::Forward).unwrap();
    let seq: Vec<LegId> = (0..40).map(|k| plan.phases[k % 4].swing_leg).collect();
    assert!(is_cyclic_rotation(&seq, &FORWARD_SEQUENCE));
    assert!(!is_cyclic_rotation(
        &seq,
        &[LegId::Leg1, LegId::Leg2, LegId::Leg3, LegId::Leg4]
    ));
}

/// Reachable forward interval found by brute-force stepping of the foot along
/// the body-forward line at standing height.
fn scanned_interval(cfg: &GaitConfig, g: &LegGeometry, leg: LegId) -> (f64, f64) {
    let m = cfg.shoulder_mount(leg);
    let y = m.y + if leg.is_left() { 1.0 } else { -1.0 } * cfg.stance_y_offset;
    let step = 1e-4;
    let ok = |u: f64| {
        let p = Vector3::new(m.x + u, y, -cfg.body_height);
        inverse_kinematics(g, &cfg.body_to_shoulder(leg, &p), cfg.ik_branch).is_ok()
    };
    let mut hi = 0.0;
    while ok(hi + step) {
        hi += step;
    }
    let mut lo = 0.0;
    while ok(lo - step) {
        lo -= step;
    }
    (lo, hi)
}

#[test]
fn workspace_partition_respected() {
    let cfg = GaitConfig::default();
    let g = LegGeometry::default();
    for plan in plans() {
        for leg in LegId::ALL {
            let (lo, hi) = scanned_interval(&cfg, &g, leg);
            let ws = plan.workspaces[leg.index()];
            assert!((ws.reachable.0 - lo).abs() < 2e-4 && (ws.reachable.1 - hi).abs() < 2e-4);
            let quarter = 0.25 * (hi - lo);
            let (a, b) = if leg.is_front() {
                (lo + quarter, hi)
            } else {
                (lo, hi - quarter)
            };
            let mount_x = cfg.shoulder_mount(leg).x;
            for phase in 0..4 {
                for i in 0..=SAMPLES {
                    let s = i as f64 / SAMPLES as f64;
                    let u = plan.foot_in_body(leg, phase, s).x - mount_x;
                    assert!(
                        u >= a - 2e-4 && u <= b + 2e-4,
                        "{:?} {leg} phase {phase}: {u} not in [{a}, {b}]",
                        plan.direction
                    );
                }
            }
        }
    }
}

#[test]
fn every_sampled_target_is_reachable() {
    let g = LegGeometry::default();
    for plan in plans() {
        for phase in 0..4 {
            for i in 0..=200 {
                let s = i as f64 / 200.0;
                for leg in LegId::ALL {
                    assert!(reachable(&g, &foot_trajectory(leg, phase, s, &plan)));
                }
            }
        }
    }
}

#[test]
fn plan_closes_and_is_continuous() {
    for plan in plans() {
        for phase in 0..4 {
            for leg in LegId::ALL {
                let end = plan.foot_in_body(leg, phase, 1.0);
                let next = plan.phase_start(phase + 1, leg);
                assert!((end - next).norm() < 1e-12, "{:?} {leg} {phase}", plan.direction);
            }
        }
    }
}

fn world_point(plan: &GaitPlan, phase: usize, s: f64, p: &Vector3<f64>) -> Vector2<f64> {
    let (t, yaw) = plan.phases[phase].body.at(s);
    t + Rotation2::new(yaw) * p.xy()
}

#[test]
fn stance_feet_stay_fixed_in_world() {
    for plan in plans() {
        for phase in 0..4 {
            for leg in LegId::ALL {
                if plan.is_swinging(leg, phase) {
                    continue;
                }
                let anchor = world_point(&plan, phase, 0.0, &plan.foot_in_body(leg, phase, 0.0));
                for i in 1..=SAMPLES {
                    let s = i as f64 / SAMPLES as f64;
                    let w = world_point(&plan, phase, s, &plan.foot_in_body(leg, phase, s));
                    assert!((w - anchor).norm() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn backward_is_forward_reversed() {
    let cfg = GaitConfig::default();
    let g = LegGeometry::default();
    let fwd = plan_cycle(&cfg, &g, Direction::Forward).unwrap();
    let back = plan_cycle(&cfg, &g, Direction::Backward).unwrap();
    for k in 0..4 {
        let f = &fwd.phases[3 - k];
        let b = &back.phases[k];
        assert_eq!(b.swing_leg, f.swing_leg);
        assert!((b.body.dx + f.body.dx).abs() < 1e-15);
        for i in 0..=SAMPLES {
            let s = i as f64 / SAMPLES as f64;
            for leg in LegId::ALL {
                let pb = back.foot_in_body(leg, k, s);
                let pf = fwd.foot_in_body(leg, 3 - k, 1.0 - s);
                assert!((pb - pf).norm() < 1e-12);
            }
            let (tb, _) = b.body.at(s);
            let (tf, _) = f.body.at(1.0 - s);
            let (tf_end, _) = f.body.at(1.0);
            // backward body offset from its phase start equals the forward offset undone
            assert!((tb - (tf - tf_end)).norm() < 1e-15);
        }
    }
}

#[test]
fn joint_traces_round_trip_and_repeat() {
    let g = LegGeometry::default();
    for plan in plans() {
        let trace = joint_trace(&plan, &g, 25).unwrap();
        assert_eq!(trace.len(), 100);
        for (n, row) in trace.angles.iter().enumerate() {
            let (phase, i) = (n / 25, n % 25);
            for leg in LegId::ALL {
                let target = foot_trajectory(leg, phase, i as f64 / 25.0, &plan);
                let (_, foot) = forward_kinematics(&g, &row[leg.index()]);
                assert!(foot.distance(&target) <= 1e-9 * g.total_length());
            }
        }

        // wrap-around sample: evaluating the closing instant directly equals the first row
        let closing: Vec<_> = LegId::ALL
            .iter()
            .map(|&leg| {
                let f = plan.config.body_to_shoulder(leg, &plan.foot_in_body(leg, 3, 1.0));
                inverse_kinematics(&g, &f, plan.config.ik_branch).unwrap()
            })
            .collect();
        for leg in LegId::ALL {
            let a = closing[leg.index()].as_array();
            let b = trace.angles[0][leg.index()].as_array();
            for j in 0..3 {
                assert!((a[j] - b[j]).abs() < 1e-9);
            }
        }

        let ten = trace.repeat(10);
        let period = trace.len();
        for n in 0..ten.len() - period {
            assert_eq!(ten.angles[n], ten.angles[n + period]);
            assert!((ten.times[n + period] - ten.times[n] - plan.cycle_duration()).abs() < 1e-9);
        }
    }
}

#[test]
fn joint_speed_bounded() {
    let g = LegGeometry::default();
    for plan in plans() {
        let trace = joint_trace(&plan, &g, 50).unwrap().repeat(2);
        let dt = plan.phase_duration() / 50.0;
        let bound = plan.config.max_joint_velocity * dt;
        for w in trace.angles.windows(2) {
            for (qa, qb) in w[0].iter().zip(&w[1]) {
                let (a, b) = (qa.as_array(), qb.as_array());
                for j in 0..3 {
                    assert!((a[j] - b[j]).abs() <= bound, "{:?}", plan.direction);
                }
            }
        }
    }
}

#[test]
fn zero_stride_trace_is_constant() {
    let cfg = GaitConfig {
        stride_length: 0.0,
        ..GaitConfig::default()
    };
    let g = LegGeometry::default();
    let plan = plan_cycle(&cfg, &g, Direction::Forward).unwrap();
    let trace = joint_trace(&plan, &g, 10).unwrap();
    // swing legs still lift; ground-level samples are all identical
    for (n, row) in trace.angles.iter().enumerate() {
        for leg in LegId::ALL {
            let lifted = plan.is_swinging(leg, n / 10) && n % 10 != 0;
            if !lifted {
                assert_eq!(row[leg.index()], trace.angles[0][leg.index()]);
            }
        }
    }
    // and the feet never travel along the ground
    for phase in 0..4 {
        for leg in LegId::ALL {
            let a = plan.foot_in_body(leg, phase, 0.0);
            let b = plan.foot_in_body(leg, phase, 1.0);
            assert!((a - b).norm() < 1e-15);
        }
    }
}

#[test]
fn csv_layout() {
    let g = LegGeometry::default();
    let plan = plan_cycle(&GaitConfig::default(), &g, Direction::Forward).unwrap();
    let csv = joint_trace(&plan, &g, 5).unwrap().repeat(2).to_csv();
    assert!(!csv.contains('\r'));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "time_s,L11,L12,L13,L21,L22,L23,L31,L32,L33,L41,L42,L43");
    assert_eq!(lines.len(), 1 + 2 * 20);
    for l in &lines[1..] {
        assert_eq!(l.split(',').count(), 13);
    }
    for n in 1..=20 {
        let a: Vec<&str> = lines[n].split(',').skip(1).collect();
        let b: Vec<&str> = lines[n + 20].split(',').skip(1).collect();
        assert_eq!(a, b);
    }
    assert!(lines[2].starts_with("0.1000,"));
}

#[test]
fn per_leg_csv_matches_combined_columns() {
    let g = LegGeometry::default();
    let plan = plan_cycle(&GaitConfig::default(), &g, Direction::Forward).unwrap();
    let trace = joint_trace(&plan, &g, 5).unwrap();
    let all: Vec<Vec<String>> = trace
        .to_csv()
        .lines()
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    for leg in LegId::ALL {
        let csv = trace.leg_csv(leg);
        let n = leg.number();
        assert!(csv.starts_with(&format!("time_s,L{n}1,L{n}2,L{n}3\n")));
        for (row, line) in all.iter().zip(csv.lines()) {
            let want: Vec<&str> = std::iter::once(row[0].as_str())
                .chain(row[1 + 3 * leg.index()..4 + 3 * leg.index()].iter().map(String::as_str))
                .collect();
            assert_eq!(line.split(',').collect::<Vec<_>>(), want);
        }
    }
}

#[test]
fn swing_targets_never_touch_shoulder_axis() {
    let plan = plan_cycle(&GaitConfig::default(), &LegGeometry::default(), Direction::Left).unwrap();
    for phase in 0..4 {
        for leg in LegId::ALL {
            let f: FootPosition = foot_trajectory(leg, phase, 0.5, &plan);
            assert!(f.x.hypot(f.y) > 0.05);
        }
    }
}
