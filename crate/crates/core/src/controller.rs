//! Task-driven walking state machine with reactive obstacle avoidance.
//!
//! The simulation calls [`step`] at every gait phase boundary, and on every
//! tick while the robot is halted so that a new task starts without delay.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arena::RobotPose;
use crate::command::{Command, TaskSpec};
use crate::gait::Direction;
use crate::kinematics::normalize_angle;
use crate::sensors::SensorFrame;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Idle,
    WalkForward,
    AvoidLeft,
    AvoidRight,
    AvoidBackward,
    Reached,
}

impl Mode {
    pub const ALL: [Mode; 6] = [
        Mode::Idle,
        Mode::WalkForward,
        Mode::AvoidLeft,
        Mode::AvoidRight,
        Mode::AvoidBackward,
        Mode::Reached,
    ];

    pub fn is_avoiding(self) -> bool {
        matches!(self, Mode::AvoidLeft | Mode::AvoidRight | Mode::AvoidBackward)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Idle => "idle",
            Mode::WalkForward => "walk_forward",
            Mode::AvoidLeft => "avoid_left",
            Mode::AvoidRight => "avoid_right",
            Mode::AvoidBackward => "avoid_backward",
            Mode::Reached => "reached",
        }
    }

    fn avoid(direction: Avoidance) -> Mode {
        match direction {
            Avoidance::Left => Mode::AvoidLeft,
            Avoidance::Right => Mode::AvoidRight,
            Avoidance::Backward => Mode::AvoidBackward,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotionCommand {
    Forward,
    Left,
    Right,
    Backward,
    Halt,
}

impl MotionCommand {
    pub fn direction(self) -> Option<Direction> {
        match self {
            MotionCommand::Forward => Some(Direction::Forward),
            MotionCommand::Left => Some(Direction::Left),
            MotionCommand::Right => Some(Direction::Right),
            MotionCommand::Backward => Some(Direction::Backward),
            MotionCommand::Halt => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MotionCommand::Halt => "halt",
            other => other.direction().unwrap().as_str(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Avoidance {
    Left,
    Right,
    Backward,
}

impl Avoidance {
    fn command(self) -> MotionCommand {
        match self {
            Avoidance::Left => MotionCommand::Left,
            Avoidance::Right => MotionCommand::Right,
            Avoidance::Backward => MotionCommand::Backward,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub x: f64,
    pub y: f64,
    pub radius: f64,
}

impl Task {
    pub fn distance_from(&self, pose: &RobotPose) -> f64 {
        (self.x - pose.x).hypot(self.y - pose.y)
    }

    /// Goal bearing relative to the current heading, in (-pi, pi].
    pub fn heading_error(&self, pose: &RobotPose) -> f64 {
        normalize_angle((self.y - pose.y).atan2(self.x - pose.x) - pose.heading)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerParams {
    /// Phases per avoidance maneuver.
    pub avoid_phases: u32,
    /// Forward phases always walked after a side maneuver.
    pub commit_phases: u32,
    /// Longest boundary follow after a side maneuver, in phases.
    pub follow_max_phases: u32,
    /// Boundary following ends once the avoided side is this clear (m).
    pub release_clearance: f64,
    /// A detour keeps its side until the goal is this much closer than where
    /// the obstacle was first met (m).
    pub detour_progress: f64,
    pub tie_margin: f64,
    pub min_side_clearance: f64,
    pub heading_threshold_deg: f64,
}

impl Default for ControllerParams {
    fn default() -> Self {
        Self {
            avoid_phases: 4,
            commit_phases: 4,
            follow_max_phases: 40,
            release_clearance: 0.5,
            detour_progress: 0.3,
            tie_margin: 0.05,
            min_side_clearance: 0.30,
            heading_threshold_deg: 15.0,
        }
    }
}

impl ControllerParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.avoid_phases == 0 {
            return Err("avoid_phases must be at least 1".into());
        }
        if !(self.tie_margin >= 0.0 && self.tie_margin.is_finite()) {
            return Err("tie_margin must be finite and >= 0".into());
        }
        if self.commit_phases > self.follow_max_phases {
            return Err("commit_phases must not exceed follow_max_phases".into());
        }
        if !(self.release_clearance >= 0.0 && self.release_clearance.is_finite()) {
            return Err("release_clearance must be finite and >= 0".into());
        }
        if !(self.min_side_clearance >= 0.0 && self.min_side_clearance.is_finite()) {
            return Err("min_side_clearance must be finite and >= 0".into());
        }
        if !(self.heading_threshold_deg > 0.0 && self.heading_threshold_deg < 180.0) {
            return Err("heading_threshold_deg must be in (0, 180)".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerState {
    pub mode: Mode,
    pub task: Option<Task>,
    /// Phases left in the current maneuver, counting the one being emitted.
    pub countdown: u32,
    /// Phases left in the boundary-follow window after a side maneuver.
    pub follow: u32,
    /// Side of the last maneuver while following. The obstacle is on the
    /// other side; re-triggering keeps turning the same way.
    pub last_avoid: Option<Avoidance>,
    /// Side chosen for the obstacle being detoured and the goal distance when it was first met.
    pub detour: Option<(Avoidance, f64)>,
}

impl Default for ControllerState {
    fn default() -> Self {
        Self {
            mode: Mode::Idle,
            task: None,
            countdown: 0,
            follow: 0,
            last_avoid: None,
            detour: None,
        }
    }
}

impl ControllerState {
    pub fn is_valid(&self) -> bool {
        let task_ok = match self.mode {
            Mode::Idle => self.task.is_none(),
            _ => self.task.is_some(),
        };
        task_ok && (self.countdown > 0) == self.mode.is_avoiding()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("rejected {command}: {reason}")]
pub struct RejectedCommand {
    pub command: &'static str,
    pub reason: String,
}

/// Picks the avoidance maneuver from the side clearances.
pub fn choose_avoidance(_frame: &SensorFrame, clearances: (f64, f64), params: &ControllerParams) -> Avoidance {
    let (left, right) = clearances;
    if left < params.min_side_clearance && right < params.min_side_clearance {
        Avoidance::Backward
    } else if right > left + params.tie_margin {
        Avoidance::Right
    } else {
        Avoidance::Left
    }
}

/// One controller decision. Total over valid states.
pub fn step(
    state: &ControllerState,
    frame: &SensorFrame,
    clearances: (f64, f64),
    pose: &RobotPose,
    params: &ControllerParams,
) -> (ControllerState, MotionCommand) {
    let mut next = *state;
    match state.mode {
        Mode::Idle | Mode::Reached => (next, MotionCommand::Halt),
        Mode::AvoidLeft | Mode::AvoidRight | Mode::AvoidBackward => {
            next.countdown = state.countdown.saturating_sub(1);
            if next.countdown > 0 {
                let cmd = match state.mode {
                    Mode::AvoidLeft => MotionCommand::Left,
                    Mode::AvoidRight => MotionCommand::Right,
                    _ => MotionCommand::Backward,
                };
                return (next, cmd);
            }
            // maneuver done: walk forward again, re-testing the sensor right away
            next.last_avoid = match state.mode {
                Mode::AvoidLeft => Some(Avoidance::Left),
                Mode::AvoidRight => Some(Avoidance::Right),
                _ => None,
            };
            next.mode = Mode::WalkForward;
            next.follow = if next.last_avoid.is_some() {
                params.follow_max_phases
            } else {
                0
            };
            walk_forward(&next, frame, clearances, pose, params)
        }
        Mode::WalkForward => walk_forward(state, frame, clearances, pose, params),
    }
}

fn walk_forward(
    state: &ControllerState,
    frame: &SensorFrame,
    clearances: (f64, f64),
    pose: &RobotPose,
    params: &ControllerParams,
) -> (ControllerState, MotionCommand) {
    let mut next = *state;
    let task = state.task.expect("walking without a task");
    if task.distance_from(pose) <= task.radius {
        next.mode = Mode::Reached;
        next.follow = 0;
        next.last_avoid = None;
        return (next, MotionCommand::Halt);
    }
    let dist = task.distance_from(pose);
    if let Some((_, start)) = state.detour {
        if dist < start - params.detour_progress {
            next.detour = None;
        }
    }
    if frame.ultrasonic.triggered {
        let a = match (state.last_avoid, next.detour) {
            (Some(side), _) if state.follow > 0 => side,
            (_, Some((side, _))) => side,
            _ => choose_avoidance(frame, clearances, params),
        };
        if next.detour.is_none() && a != Avoidance::Backward {
            next.detour = Some((a, dist));
        }
        next.mode = Mode::avoid(a);
        next.countdown = params.avoid_phases;
        next.follow = 0;
        next.last_avoid = None;
        return (next, a.command());
    }
    if let Some(side) = state.last_avoid.filter(|_| state.follow > 0) {
        let walked = params.follow_max_phases - state.follow;
        let beside = match side {
            Avoidance::Left => clearances.1,
            _ => clearances.0,
        };
        if walked < params.commit_phases || beside < params.release_clearance {
            next.follow = state.follow - 1;
            if next.follow == 0 {
                next.last_avoid = None;
            }
            return (next, MotionCommand::Forward);
        }
    }
    next.follow = 0;
    next.last_avoid = None;
    let err = task.heading_error(pose);
    let cmd = if err.abs() <= params.heading_threshold_deg.to_radians() {
        MotionCommand::Forward
    } else if err > 0.0 {
        MotionCommand::Left
    } else {
        MotionCommand::Right
    };
    (next, cmd)
}

/// Applies a task or stop command. Other commands leave the state unchanged.
pub fn handle_command(
    state: &ControllerState,
    cmd: &Command,
    default_radius: f64,
) -> Result<ControllerState, RejectedCommand> {
    match cmd {
        Command::SetTask(TaskSpec { x, y, radius }) => {
            let radius = radius.unwrap_or(default_radius);
            if !(x.is_finite() && y.is_finite()) {
                return Err(RejectedCommand {
                    command: "set_task",
                    reason: "goal coordinates must be finite".into(),
                });
            }
            if !(radius.is_finite() && radius > 0.0) {
                return Err(RejectedCommand {
                    command: "set_task",
                    reason: "arrival radius must be positive".into(),
                });
            }
            Ok(ControllerState {
                mode: Mode::WalkForward,
                task: Some(Task { x: *x, y: *y, radius }),
                countdown: 0,
                follow: 0,
                last_avoid: None,
                detour: None,
            })
        }
        Command::Stop => Ok(ControllerState::default()),
        Command::PlaceObstacle(_) | Command::SetRate(_) => Ok(*state),
    }
}
