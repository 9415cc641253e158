//! Closed loop of arena, sensors, controller and gait on a fixed tick.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arena::{self, Arena, RobotPose, WorldState};
use crate::command::{Cadence, Command, ScriptEntry, TaskSpec};
use crate::controller::{self, ControllerParams, ControllerState, Mode, MotionCommand};
use crate::gait::{foot_trajectory, plan_cycle, Direction, GaitConfig, GaitError, GaitPlan, JointServos, LegId};
use crate::kinematics::{inverse_kinematics, JointAngles, JointLimit, LegGeometry};
use crate::sensors::{read_frame, side_clearances, RandomStream, SensorFrame, SensorsConfig};

#[derive(Debug, Error, Clone, PartialEq)]
#[error("config error at {path}: {message}")]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(path: impl Into<String>, message: impl ToString) -> Self {
        Self {
            path: path.into(),
            message: message.to_string(),
        }
    }
}

/// Leg link lengths (m) and joint limits (degrees, `[min, max]` per joint).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LegConfig {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    pub limits_deg: [[f64; 2]; 3],
}

impl Default for LegConfig {
    fn default() -> Self {
        let g = LegGeometry::default();
        Self {
            l1: g.l1,
            l2: g.l2,
            l3: g.l3,
            limits_deg: g.limits.map(|l| [l.min.to_degrees(), l.max.to_degrees()]),
        }
    }
}

impl LegConfig {
    pub fn geometry(&self) -> Result<LegGeometry, ConfigError> {
        let limits = self
            .limits_deg
            .map(|[lo, hi]| JointLimit::new(lo.to_radians(), hi.to_radians()));
        LegGeometry::new(self.l1, self.l2, self.l3, limits).map_err(|e| ConfigError::new("leg", e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub leg: LegConfig,
    pub gait: GaitConfig,
    pub servos: JointServos,
    pub sensors: SensorsConfig,
    pub controller: ControllerParams,
    pub telemetry: Cadence,
    /// Radius of the body disc used for collisions and clearances (m).
    pub body_radius: f64,
    /// Tick length (s).
    pub dt: f64,
    pub seed: u64,
    /// Tick budget for a run.
    pub ticks: u64,
    /// Arena file, relative to the config file.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub arena: Option<String>,
    /// Command script, relative to the config file.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub script: Option<String>,
    /// Task installed at time zero.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub task: Option<TaskSpec>,
}

/// `gait.<field>` when the validation message opens with a field name.
fn gait_path(e: &GaitError) -> String {
    if let GaitError::InvalidConfig(m) = e {
        if let Some(w) = m.split_whitespace().next() {
            if w.chars().all(|c| c.is_ascii_lowercase() || c == '_') {
                return format!("gait.{w}");
            }
        }
    }
    "gait".into()
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            leg: LegConfig::default(),
            gait: GaitConfig::default(),
            servos: JointServos::default(),
            sensors: SensorsConfig::default(),
            controller: ControllerParams::default(),
            telemetry: Cadence::default(),
            body_radius: 0.2,
            dt: 0.02,
            seed: 0,
            ticks: 30_000,
            arena: None,
            script: None,
            task: None,
        }
    }
}

impl SimConfig {
    /// Parses a config document; errors name the offending field path.
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: SimConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            ConfigError::new(path, e.into_inner())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let g = self.leg.geometry()?;
        self.gait.validate().map_err(|e| ConfigError::new(gait_path(&e), e))?;
        for (j, s) in self.servos.0.iter().enumerate() {
            let path = format!("servos[{j}]");
            s.validate().map_err(|e| ConfigError::new(&path, e))?;
            if !s.covers(&g.limits[j]) {
                return Err(ConfigError::new(path, "servo range does not cover the joint limits"));
            }
        }
        self.sensors.validate().map_err(|e| ConfigError::new("sensors", e))?;
        self.controller
            .validate()
            .map_err(|e| ConfigError::new("controller", e))?;
        self.telemetry
            .validate()
            .map_err(|e| ConfigError::new("telemetry", e))?;
        if !(self.body_radius.is_finite() && self.body_radius > 0.0) {
            return Err(ConfigError::new("body_radius", "must be positive"));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(ConfigError::new("dt", "must be positive"));
        }
        let per_phase = self.gait.phase_duration / self.dt;
        if (per_phase - per_phase.round()).abs() > 1e-9 || per_phase.round() < 1.0 {
            return Err(ConfigError::new(
                "dt",
                format!(
                    "phase_duration {} s is not a whole number of ticks",
                    self.gait.phase_duration
                ),
            ));
        }
        Ok(())
    }

    pub fn ticks_per_phase(&self) -> u32 {
        (self.gait.phase_duration / self.dt).round() as u32
    }

    /// Arrival radius for tasks that do not give one: one stride.
    pub fn default_arrival_radius(&self) -> f64 {
        self.gait.stride_length.max(1e-3)
    }

    /// Gait plans for all four directions, in `Direction::ALL` order.
    pub fn plans(&self) -> Result<Vec<GaitPlan>, ConfigError> {
        let g = self.leg.geometry()?;
        Direction::ALL
            .iter()
            .map(|&d| plan_cycle(&self.gait, &g, d).map_err(|e| ConfigError::new("gait", e)))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Collision,
    Reached,
    TaskAccepted,
    TaskRejected,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Collision => "collision",
            EventKind::Reached => "reached",
            EventKind::TaskAccepted => "task_accepted",
            EventKind::TaskRejected => "task_rejected",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimEvent {
    pub kind: EventKind,
    pub t_sim: f64,
    pub detail: String,
}

/// Pose as written to traces: heading in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseRecord {
    pub x: f64,
    pub y: f64,
    pub heading_deg: f64,
}

impl From<&RobotPose> for PoseRecord {
    fn from(p: &RobotPose) -> Self {
        Self {
            x: p.x,
            y: p.y,
            heading_deg: p.heading.to_degrees(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickRecord {
    pub tick: u64,
    pub t: f64,
    pub pose: PoseRecord,
    pub mode: Mode,
    /// Motion executed during this tick.
    pub command: MotionCommand,
    /// Read at the end of the tick.
    pub sensors: SensorFrame,
    /// `L11..L43`.
    pub joints_deg: [f64; 12],
    pub collision: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub events: Vec<SimEvent>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
struct Stats {
    collisions: u64,
    collision_ticks: u64,
    in_collision: bool,
    distance: f64,
    phases: u64,
    avoid_maneuvers: u64,
    reached_at: Option<f64>,
}

pub struct Simulation {
    cfg: SimConfig,
    geometry: LegGeometry,
    plans: Vec<GaitPlan>,
    world: WorldState,
    pose: RobotPose,
    phase_start: RobotPose,
    controller: ControllerState,
    rng: RandomStream,
    motion: MotionCommand,
    phase: usize,
    tick_in_phase: u32,
    ticks_per_phase: u32,
    joints: [JointAngles; 4],
    frame: SensorFrame,
    cadence: Cadence,
    pending: Vec<SimEvent>,
    stats: Stats,
}

fn plan_index(d: Direction) -> usize {
    Direction::ALL.iter().position(|&x| x == d).unwrap()
}

impl Simulation {
    pub fn new(cfg: &SimConfig, arena: &Arena) -> Result<Self, ConfigError> {
        cfg.validate()?;
        arena.validate().map_err(|e| ConfigError::new("arena", e))?;
        let geometry = cfg.leg.geometry()?;
        let plans = cfg.plans()?;
        let mut world = arena.world.clone();
        world.clock = arena::SimulationTick::new(cfg.dt);
        let s = arena.robot_start;
        let pose = RobotPose::new(s.x, s.y, s.heading_deg.to_radians(), cfg.body_radius);
        let mut rng = RandomStream::new(cfg.seed);
        let frame = read_frame(&world, &pose, &cfg.sensors, &mut rng);
        let mut sim = Self {
            cfg: cfg.clone(),
            geometry,
            plans,
            world,
            pose,
            phase_start: pose,
            controller: ControllerState::default(),
            rng,
            motion: MotionCommand::Halt,
            phase: 0,
            tick_in_phase: 0,
            ticks_per_phase: cfg.ticks_per_phase(),
            joints: [JointAngles::default(); 4],
            frame,
            cadence: cfg.telemetry,
            pending: Vec::new(),
            stats: Stats::default(),
        };
        sim.joints = sim.posture(Direction::Forward, 0, 0.0);
        Ok(sim)
    }

    fn posture(&self, d: Direction, phase: usize, s: f64) -> [JointAngles; 4] {
        let plan = &self.plans[plan_index(d)];
        LegId::ALL.map(|leg| {
            inverse_kinematics(
                &self.geometry,
                &foot_trajectory(leg, phase, s, plan),
                plan.config.ik_branch,
            )
            .expect("validated plan is reachable")
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn pose(&self) -> &RobotPose {
        &self.pose
    }

    pub fn controller(&self) -> &ControllerState {
        &self.controller
    }

    pub fn motion(&self) -> MotionCommand {
        self.motion
    }

    pub fn frame(&self) -> &SensorFrame {
        &self.frame
    }

    pub fn joints(&self) -> &[JointAngles; 4] {
        &self.joints
    }

    pub fn cadence(&self) -> &Cadence {
        &self.cadence
    }

    pub fn plan(&self, d: Direction) -> &GaitPlan {
        &self.plans[plan_index(d)]
    }

    pub fn time(&self) -> f64 {
        self.world.time()
    }

    pub fn ticks(&self) -> u64 {
        self.world.clock.index
    }

    /// True when halted at rest with nothing to do.
    pub fn is_settled(&self) -> bool {
        matches!(self.controller.mode, Mode::Idle | Mode::Reached) && self.tick_in_phase == 0
    }

    /// Applies an operator command between ticks. The resulting event is
    /// returned and also attached to the next tick record.
    pub fn apply_command(&mut self, cmd: &Command) -> SimEvent {
        let outcome = match cmd {
            Command::SetTask(_) | Command::Stop => {
                controller::handle_command(&self.controller, cmd, self.cfg.default_arrival_radius())
                    .map(|s| self.controller = s)
                    .map_err(|e| e.reason)
            }
            Command::PlaceObstacle(ob) => {
                if ob.is_finite() && ob.distance_to(&self.pose.position()) < self.pose.body_radius {
                    Err("obstacle would overlap the robot".to_string())
                } else {
                    self.world.place_obstacle(*ob)
                }
            }
            Command::SetRate(o) => o.validate().map(|_| self.cadence.apply(o)),
        };
        let event = match outcome {
            Ok(()) => SimEvent {
                kind: EventKind::TaskAccepted,
                t_sim: self.time(),
                detail: cmd.name().to_string(),
            },
            Err(reason) => SimEvent {
                kind: EventKind::TaskRejected,
                t_sim: self.time(),
                detail: format!("{}: {reason}", cmd.name()),
            },
        };
        self.pending.push(event.clone());
        event
    }

    /// Reports a command that never made it past decoding.
    pub fn reject(&mut self, detail: String) -> SimEvent {
        let event = SimEvent {
            kind: EventKind::TaskRejected,
            t_sim: self.time(),
            detail,
        };
        self.pending.push(event.clone());
        event
    }

    /// Advances the simulation by one tick.
    pub fn tick(&mut self) -> TickRecord {
        let mut events = std::mem::take(&mut self.pending);
        if self.tick_in_phase == 0 {
            let before = self.controller.mode;
            let clearances = side_clearances(&self.world, &self.pose, &self.cfg.sensors.ultrasonic);
            let (state, cmd) = controller::step(
                &self.controller,
                &self.frame,
                clearances,
                &self.pose,
                &self.cfg.controller,
            );
            self.controller = state;
            self.motion = cmd;
            if state.mode.is_avoiding() && !before.is_avoiding() {
                self.stats.avoid_maneuvers += 1;
            }
            if state.mode == Mode::Reached && before != Mode::Reached {
                self.stats.reached_at = Some(self.time());
                events.push(SimEvent {
                    kind: EventKind::Reached,
                    t_sim: self.time(),
                    detail: String::new(),
                });
            }
        }

        let previous = self.pose.position();
        let adv = match self.motion.direction() {
            Some(d) => {
                let s = f64::from(self.tick_in_phase + 1) / f64::from(self.ticks_per_phase);
                let body = self.plans[plan_index(d)].phases[self.phase].body;
                let adv = arena::advance(&mut self.world, &self.phase_start, Some(&body), s);
                self.joints = self.posture(d, self.phase, s);
                self.tick_in_phase += 1;
                if self.tick_in_phase == self.ticks_per_phase {
                    self.tick_in_phase = 0;
                    self.phase = (self.phase + 1) % 4;
                    self.phase_start = adv.pose;
                    self.stats.phases += 1;
                }
                adv
            }
            None => arena::advance(&mut self.world, &self.pose, None, 0.0),
        };
        self.pose = adv.pose;
        self.stats.distance += (self.pose.position() - previous).norm();

        if adv.collision {
            self.stats.collision_ticks += 1;
            if !self.stats.in_collision {
                self.stats.collisions += 1;
                events.push(SimEvent {
                    kind: EventKind::Collision,
                    t_sim: self.time(),
                    detail: String::new(),
                });
            }
        }
        self.stats.in_collision = adv.collision;

        self.frame = read_frame(&self.world, &self.pose, &self.cfg.sensors, &mut self.rng);
        let mut joints_deg = [0.0; 12];
        for (l, q) in self.joints.iter().enumerate() {
            for (j, a) in q.as_array().iter().enumerate() {
                joints_deg[3 * l + j] = a.to_degrees();
            }
        }
        TickRecord {
            tick: self.ticks(),
            t: self.time(),
            pose: PoseRecord::from(&self.pose),
            mode: self.controller.mode,
            command: self.motion,
            sensors: self.frame,
            joints_deg,
            collision: adv.collision,
            events,
        }
    }

    pub fn summary(&self, outcome: Outcome) -> RunSummary {
        RunSummary {
            outcome,
            reached: self.stats.reached_at.is_some(),
            reached_at_s: self.stats.reached_at,
            ticks: self.ticks(),
            sim_time_s: self.time(),
            collisions: self.stats.collisions,
            collision_ticks: self.stats.collision_ticks,
            distance_traveled_m: self.stats.distance,
            phases: self.stats.phases,
            cycles: self.stats.phases as f64 / 4.0,
            avoid_maneuvers: self.stats.avoid_maneuvers,
            final_pose: PoseRecord::from(&self.pose),
            final_mode: self.controller.mode,
            seed: self.cfg.seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Reached,
    ScriptExhausted,
    TickBudgetExceeded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub outcome: Outcome,
    pub reached: bool,
    pub reached_at_s: Option<f64>,
    pub ticks: u64,
    pub sim_time_s: f64,
    /// Separate contact episodes.
    pub collisions: u64,
    pub collision_ticks: u64,
    pub distance_traveled_m: f64,
    pub phases: u64,
    pub cycles: f64,
    pub avoid_maneuvers: u64,
    pub final_pose: PoseRecord,
    pub final_mode: Mode,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub records: Vec<TickRecord>,
    pub summary: RunSummary,
}

impl RunTrace {
    /// One JSON object per tick, then a final `{"summary": ...}` line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        out.push_str("{\"summary\":");
        out.push_str(&serde_json::to_string(&self.summary).expect("summary serializes"));
        out.push_str("}\n");
        out
    }

    /// Maximal runs of ticks spent in avoidance modes, as `(mode, first tick, last tick)`.
    pub fn avoid_intervals(&self) -> Vec<(Mode, u64, u64)> {
        let mut out: Vec<(Mode, u64, u64)> = Vec::new();
        for r in &self.records {
            if !r.mode.is_avoiding() {
                continue;
            }
            match out.last_mut() {
                Some((m, _, last)) if *m == r.mode && *last + 1 == r.tick => *last = r.tick,
                _ => out.push((r.mode, r.tick, r.tick)),
            }
        }
        out
    }
}

/// Runs to completion: task reached with no script left, script exhausted
/// with the robot at rest, or tick budget spent.
pub fn run_sim(cfg: &SimConfig, arena: &Arena, script: &[ScriptEntry]) -> Result<RunTrace, ConfigError> {
    let mut sim = Simulation::new(cfg, arena)?;
    if let Some(task) = cfg.task {
        sim.apply_command(&Command::SetTask(task));
    }
    let mut next = 0;
    let mut records = Vec::new();
    let outcome = loop {
        while next < script.len() && script[next].0 <= sim.time() + 1e-9 {
            sim.apply_command(&script[next].1);
            next += 1;
        }
        if next == script.len() && sim.is_settled() && sim.pending.is_empty() {
            break if sim.controller.mode == Mode::Reached {
                Outcome::Reached
            } else {
                Outcome::ScriptExhausted
            };
        }
        if sim.ticks() >= cfg.ticks {
            break Outcome::TickBudgetExceeded;
        }
        records.push(sim.tick());
    };
    Ok(RunTrace {
        summary: sim.summary(outcome),
        records,
    })
}
