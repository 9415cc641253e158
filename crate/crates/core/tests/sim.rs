use arachne_core::arena::{load_arena, random_arena, Arena, Bounds, RandomArenaParams, RobotStart, WorldState};
use arachne_core::command::{Command, ScriptEntry, TaskSpec};
use arachne_core::controller::{Mode, MotionCommand};
use arachne_core::gait::Direction;
use arachne_core::sensors::SensorsConfig;
use arachne_core::sim::{run_sim, EventKind, Outcome, SimConfig, Simulation};

fn open_arena(heading_deg: f64) -> Arena {
    Arena::new(
        WorldState::empty(Bounds::new(-10.0, -10.0, 10.0, 10.0)),
        RobotStart {
            x: 0.0,
            y: 0.0,
            heading_deg,
        },
    )
    .unwrap()
}

fn noiseless() -> SimConfig {
    SimConfig {
        sensors: SensorsConfig::noiseless(),
        ..SimConfig::default()
    }
}

fn task(x: f64, y: f64) -> Command {
    Command::SetTask(TaskSpec { x, y, radius: None })
}

#[test]
fn one_meter_goal_within_cycle_bound() {
    let cfg = SimConfig {
        task: Some(TaskSpec {
            x: 1.0,
            y: 0.0,
            radius: None,
        }),
        ..noiseless()
    };
    let trace = run_sim(&cfg, &open_arena(0.0), &[]).unwrap();
    let s = &trace.summary;
    assert_eq!(s.outcome, Outcome::Reached);
    assert_eq!(s.collisions, 0);
    let bound = 1.0 / cfg.gait.stride_length + 4.0;
    assert!(s.cycles <= bound, "{} cycles > {bound}", s.cycles);
}

#[test]
fn any_direction_goal_within_cycle_bound() {
    let cfg = noiseless();
    for k in 0..24 {
        let bearing = (k as f64 * 15.0 + 7.0).to_radians();
        let d = 0.5 + 0.25 * (k % 11) as f64;
        let goal = TaskSpec {
            x: d * bearing.cos(),
            y: d * bearing.sin(),
            radius: None,
        };
        let trace = run_sim(
            &SimConfig {
                task: Some(goal),
                ..cfg.clone()
            },
            &open_arena(0.0),
            &[],
        )
        .unwrap();
        let s = &trace.summary;
        assert!(s.reached, "goal {goal:?}");
        let bound = d / cfg.gait.stride_length + 4.0;
        assert!(s.cycles <= bound, "goal {goal:?}: {} cycles > {bound}", s.cycles);
    }
}

#[test]
fn forward_cycle_moves_exactly_one_stride() {
    let cfg = noiseless();
    let mut sim = Simulation::new(&cfg, &open_arena(30.0)).unwrap();
    let heading = 30f64.to_radians();
    sim.apply_command(&task(5.0 * heading.cos(), 5.0 * heading.sin()));
    let per_phase = cfg.ticks_per_phase() as usize;
    let mut last = None;
    for _ in 0..4 * per_phase {
        let r = sim.tick();
        assert_eq!(r.command, MotionCommand::Forward);
        last = Some(r);
    }
    let r = last.unwrap();
    let m = sim.plan(Direction::Forward).cycle_motion();
    assert!((r.pose.x - m.dx * heading.cos()).abs() < 1e-12);
    assert!((r.pose.y - m.dx * heading.sin()).abs() < 1e-12);
    assert!((r.pose.heading_deg - 30.0).abs() < 1e-9);
}

#[test]
fn left_cycle_turns_in_place() {
    let cfg = noiseless();
    let mut sim = Simulation::new(&cfg, &open_arena(0.0)).unwrap();
    sim.apply_command(&task(-3.0, 0.01));
    for _ in 0..4 * cfg.ticks_per_phase() {
        assert_eq!(sim.tick().command, MotionCommand::Left);
    }
    let yaw = sim.plan(Direction::Left).cycle_motion().dyaw;
    assert!((sim.pose().heading - yaw).abs() < 1e-9);
    assert!(sim.pose().x.abs() < 1e-9 && sim.pose().y.abs() < 1e-9);
}

#[test]
fn per_tick_motion_is_bounded_and_clock_is_exact() {
    let cfg = SimConfig {
        task: Some(TaskSpec {
            x: 5.5,
            y: 1.5,
            radius: None,
        }),
        ..SimConfig::default()
    };
    let arena = load_arena(
        &std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../docs/arenas/corridor.json")).unwrap(),
    )
    .unwrap();
    let trace = run_sim(&cfg, &arena, &[]).unwrap();
    let step = cfg.gait.stride_length / 4.0 / f64::from(cfg.ticks_per_phase());
    let turn = cfg.gait.turn_per_cycle.to_degrees() / 4.0 / f64::from(cfg.ticks_per_phase());
    for (n, w) in trace.records.windows(2).enumerate() {
        let (a, b) = (&w[0], &w[1]);
        assert_eq!(b.tick, a.tick + 1);
        assert_eq!(b.t, (n + 2) as f64 * cfg.dt);
        let moved = (b.pose.x - a.pose.x).hypot(b.pose.y - a.pose.y);
        assert!(moved <= step + 1e-12, "tick {}: {moved}", b.tick);
        let mut dh = (b.pose.heading_deg - a.pose.heading_deg).abs();
        if dh > 180.0 {
            dh = 360.0 - dh;
        }
        assert!(dh <= turn + 1e-9);
    }
}

#[test]
fn corridor_box_forces_a_detour() {
    let arena = load_arena(
        &std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../docs/arenas/corridor.json")).unwrap(),
    )
    .unwrap();
    let cfg = SimConfig {
        task: Some(TaskSpec {
            x: 5.5,
            y: 1.5,
            radius: None,
        }),
        ..noiseless()
    };
    let trace = run_sim(&cfg, &arena, &[]).unwrap();
    assert!(trace.summary.reached);
    assert_eq!(trace.summary.collisions, 0);
    let intervals = trace.avoid_intervals();
    assert!(!intervals.is_empty());
    // every avoidance interval opens on a triggered reading taken while walking forward
    for &(mode, first, last) in &intervals {
        let before = &trace.records[first as usize - 2];
        assert_eq!(before.mode, Mode::WalkForward, "{mode:?} at {first}");
        assert!(before.sensors.ultrasonic.triggered);
        let len = last - first + 1;
        assert_eq!(len % u64::from(cfg.ticks_per_phase()), 0);
    }
}

#[test]
fn seeded_random_arenas_are_safe_and_mostly_reached() {
    let p = RandomArenaParams::default();
    let mut reached = 0;
    for seed in 0..100 {
        let cfg = SimConfig {
            seed,
            ticks: 30_000,
            task: Some(TaskSpec {
                x: p.goal.x,
                y: p.goal.y,
                radius: None,
            }),
            ..noiseless()
        };
        let trace = run_sim(&cfg, &random_arena(seed, &p), &[]).unwrap();
        assert_eq!(trace.summary.collisions, 0, "seed {seed}");
        reached += trace.summary.reached as usize;
    }
    assert!(reached >= 95, "{reached}/100");
}

#[test]
fn runs_are_byte_identical() {
    let arena = load_arena(
        &std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../docs/arenas/cluttered.json")).unwrap(),
    )
    .unwrap();
    let script = vec![
        ScriptEntry(0.0, task(7.0, 2.0)),
        ScriptEntry(
            20.0,
            Command::PlaceObstacle(arachne_core::arena::Obstacle::Circle {
                x: 5.0,
                y: 0.6,
                radius: 0.1,
            }),
        ),
    ];
    let cfg = SimConfig {
        seed: 42,
        ticks: 4000,
        ..SimConfig::default()
    };
    let a = run_sim(&cfg, &arena, &script).unwrap().to_jsonl();
    let b = run_sim(&cfg, &arena, &script).unwrap().to_jsonl();
    assert_eq!(a, b);
    let c = run_sim(&SimConfig { seed: 43, ..cfg }, &arena, &script)
        .unwrap()
        .to_jsonl();
    assert_ne!(a, c);
}

#[test]
fn script_commands_land_on_tick_boundaries() {
    let script = vec![ScriptEntry(0.0, task(3.0, 0.0)), ScriptEntry(1.01, Command::Stop)];
    let trace = run_sim(&noiseless(), &open_arena(0.0), &script).unwrap();
    assert_eq!(trace.summary.outcome, Outcome::ScriptExhausted);
    let stop = trace
        .records
        .iter()
        .find(|r| {
            r.events
                .iter()
                .any(|e| e.kind == EventKind::TaskAccepted && e.detail == "stop")
        })
        .unwrap();
    // applied before the first tick starting at or after 1.01 s
    assert!((stop.events[0].t_sim - 1.02).abs() < 1e-9);
    // the phase in progress is finished before halting
    assert_eq!(trace.summary.final_mode, Mode::Idle);
    let moving = trace
        .records
        .iter()
        .filter(|r| r.command != MotionCommand::Halt)
        .count();
    assert_eq!(moving as u64, trace.summary.phases * 25);
}

#[test]
fn budget_exhaustion_is_reported() {
    let cfg = SimConfig {
        ticks: 100,
        task: Some(TaskSpec {
            x: 5.0,
            y: 0.0,
            radius: None,
        }),
        ..noiseless()
    };
    let trace = run_sim(&cfg, &open_arena(0.0), &[]).unwrap();
    assert_eq!(trace.records.len(), 100);
    assert_eq!(trace.summary.outcome, Outcome::TickBudgetExceeded);
    assert!(!trace.summary.reached);
}
