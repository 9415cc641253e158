//! Crawl gait: one leg swings at a time while the other three stay planted.
//!
//! Body frame: x forward, y left, z up, origin at the body center on the
//! shoulder plane. Each shoulder frame sits at its mount point with x pointing
//! laterally outward and z up, so the body-forward foot coordinate maps onto
//! the shoulder yaw joint.

mod servo;
mod trace;

use std::f64::consts::PI;
use std::fmt;

use nalgebra::{Rotation2, Vector2, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::{inverse_kinematics, FootPosition, IkBranch, KinematicsError, LegGeometry};

pub use servo::{angle_to_pulse, JointServos, ServoConfig, ServoError};
pub use trace::{joint_trace, JointTrace};

/// Swing order of the forward walking cycle.
pub const FORWARD_SEQUENCE: [LegId; 4] = [LegId::Leg1, LegId::Leg3, LegId::Leg4, LegId::Leg2];

/// Boundary slack for the workspace-partition check.
const PARTITION_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GaitError {
    #[error("invalid gait config: {0}")]
    InvalidConfig(String),
    #[error("infeasible gait: {leg} in phase {phase}: {reason}")]
    InfeasibleGait { leg: LegId, phase: usize, reason: String },
    #[error("inverse kinematics failed for {leg} at sample {sample}: {source}")]
    Ik {
        leg: LegId,
        sample: usize,
        source: KinematicsError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LegId {
    /// front right
    Leg1,
    /// front left
    Leg2,
    /// back left
    Leg3,
    /// back right
    Leg4,
}

impl LegId {
    pub const ALL: [LegId; 4] = [LegId::Leg1, LegId::Leg2, LegId::Leg3, LegId::Leg4];

    pub fn index(self) -> usize {
        self as usize
    }

    /// 1-based leg number used in `Ljk` joint names.
    pub fn number(self) -> usize {
        self.index() + 1
    }

    pub fn is_front(self) -> bool {
        matches!(self, LegId::Leg1 | LegId::Leg2)
    }

    pub fn is_left(self) -> bool {
        matches!(self, LegId::Leg2 | LegId::Leg3)
    }

    /// +1 when the shoulder frame's outward axis is body +y, -1 when it is -y.
    fn outward_sign(self) -> f64 {
        if self.is_left() {
            1.0
        } else {
            -1.0
        }
    }
}

impl fmt::Display for LegId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Leg{}", self.number())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Left,
    Right,
    Backward,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::Forward,
        Direction::Left,
        Direction::Right,
        Direction::Backward,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Forward => "forward",
            Direction::Left => "left",
            Direction::Right => "right",
            Direction::Backward => "backward",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaitConfig {
    /// Body displacement per forward cycle (m).
    pub stride_length: f64,
    /// Swing apex above the stance plane (m).
    pub step_height: f64,
    /// Duration of one single-leg phase (s).
    pub phase_duration: f64,
    /// Lateral distance from shoulder mount to planted foot (m).
    pub stance_y_offset: f64,
    /// Shoulder plane height above ground (m).
    pub body_height: f64,
    /// Forward distance from body center to the front shoulders (m).
    pub shoulder_x: f64,
    /// Lateral distance from body center to each shoulder (m).
    pub shoulder_y: f64,
    /// Body yaw per turning cycle (rad; degrees in files).
    #[serde(rename = "turn_per_cycle_deg", with = "crate::units::degrees")]
    pub turn_per_cycle: f64,
    /// Fraction of the reachable forward interval each leg may use.
    pub workspace_partition: f64,
    /// Joint speed ceiling the generated traces must respect (rad/s).
    pub max_joint_velocity: f64,
    pub ik_branch: IkBranch,
}

impl Default for GaitConfig {
    fn default() -> Self {
        Self {
            stride_length: 0.08,
            step_height: 0.03,
            phase_duration: 0.5,
            stance_y_offset: 0.12,
            body_height: 0.08,
            shoulder_x: 0.08,
            shoulder_y: 0.06,
            turn_per_cycle: 60f64.to_radians(),
            workspace_partition: 0.75,
            max_joint_velocity: 6.0,
            ik_branch: IkBranch::KneeUp,
        }
    }
}

impl GaitConfig {
    pub fn validate(&self) -> Result<(), GaitError> {
        let positive = [
            ("step_height", self.step_height),
            ("phase_duration", self.phase_duration),
            ("stance_y_offset", self.stance_y_offset),
            ("body_height", self.body_height),
            ("shoulder_x", self.shoulder_x),
            ("shoulder_y", self.shoulder_y),
            ("max_joint_velocity", self.max_joint_velocity),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(GaitError::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.stride_length.is_finite() && self.stride_length >= 0.0) {
            return Err(GaitError::InvalidConfig(format!(
                "stride_length must be non-negative, got {}",
                self.stride_length
            )));
        }
        if !(self.workspace_partition > 0.0 && self.workspace_partition <= 1.0) {
            return Err(GaitError::InvalidConfig(format!(
                "workspace_partition must lie in (0, 1], got {}",
                self.workspace_partition
            )));
        }
        if !(self.turn_per_cycle > 0.0 && self.turn_per_cycle < PI) {
            return Err(GaitError::InvalidConfig(format!(
                "turn_per_cycle_deg must lie in (0, 180), got {}",
                self.turn_per_cycle.to_degrees()
            )));
        }
        Ok(())
    }

    /// Shoulder mount point of a leg in the body frame.
    pub fn shoulder_mount(&self, leg: LegId) -> Vector2<f64> {
        let x = if leg.is_front() {
            self.shoulder_x
        } else {
            -self.shoulder_x
        };
        Vector2::new(x, leg.outward_sign() * self.shoulder_y)
    }

    /// Expresses a body-frame point in the shoulder frame of `leg`.
    pub fn body_to_shoulder(&self, leg: LegId, p: &Vector3<f64>) -> FootPosition {
        let m = self.shoulder_mount(leg);
        let s = leg.outward_sign();
        let (dx, dy) = (p.x - m.x, p.y - m.y);
        FootPosition::new(s * dy, -s * dx, p.z)
    }

    pub fn shoulder_to_body(&self, leg: LegId, f: &FootPosition) -> Vector3<f64> {
        let m = self.shoulder_mount(leg);
        let s = leg.outward_sign();
        Vector3::new(m.x - s * f.y, m.y + s * f.x, f.z)
    }
}

/// Planar body motion over one phase, expressed in the body frame at phase start.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BodyMotion {
    pub dx: f64,
    pub dy: f64,
    pub dyaw: f64,
}

impl BodyMotion {
    pub fn translation(&self) -> Vector2<f64> {
        Vector2::new(self.dx, self.dy)
    }

    /// Motion that undoes this one, expressed in the frame where this one ends.
    pub fn inverse(&self) -> Self {
        let back = Rotation2::new(-self.dyaw) * self.translation();
        Self {
            dx: -back.x,
            dy: -back.y,
            dyaw: -self.dyaw,
        }
    }

    /// Body pose offset after fraction `s` of the phase: (translation, yaw).
    pub fn at(&self, s: f64) -> (Vector2<f64>, f64) {
        (self.translation() * s, self.dyaw * s)
    }

    /// Body-frame coordinates at fraction `s` of a point fixed in the
    /// phase-start frame.
    pub fn carry(&self, p: &Vector3<f64>, s: f64) -> Vector3<f64> {
        let (t, yaw) = self.at(s);
        let xy = Rotation2::new(-yaw) * (p.xy() - t);
        Vector3::new(xy.x, xy.y, p.z)
    }

    pub fn then(&self, next: &BodyMotion) -> BodyMotion {
        let t = self.translation() + Rotation2::new(self.dyaw) * next.translation();
        BodyMotion {
            dx: t.x,
            dy: t.y,
            dyaw: self.dyaw + next.dyaw,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwingPath {
    pub start: Vector3<f64>,
    pub end: Vector3<f64>,
    pub apex_height: f64,
}

impl SwingPath {
    /// Straight ground projection with a cosine-shaped lift peaking mid-swing.
    pub fn at(&self, s: f64) -> Vector3<f64> {
        let mut p = self.start + (self.end - self.start) * s;
        p.z = self.start.z + self.apex_height * 0.5 * (1.0 - (2.0 * PI * s).cos());
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Phase {
    pub swing_leg: LegId,
    pub swing: SwingPath,
    pub body: BodyMotion,
}

/// Forward interval (relative to the shoulder mount) a leg can reach at the
/// standing pose, and the sub-interval the gait is allowed to use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegWorkspace {
    pub reachable: (f64, f64),
    pub allowed: (f64, f64),
}

impl LegWorkspace {
    pub fn contains(&self, u: f64) -> bool {
        u >= self.allowed.0 - PARTITION_SLACK && u <= self.allowed.1 + PARTITION_SLACK
    }
}

/// One periodic cycle of four single-leg phases.
#[derive(Debug, Clone, PartialEq)]
pub struct GaitPlan {
    pub direction: Direction,
    pub phases: [Phase; 4],
    /// Body-frame foot positions at the start of each phase, indexed `[phase][leg]`.
    starts: [[Vector3<f64>; 4]; 4],
    pub config: GaitConfig,
    pub workspaces: [LegWorkspace; 4],
}

impl GaitPlan {
    pub fn phase_duration(&self) -> f64 {
        self.config.phase_duration
    }

    pub fn cycle_duration(&self) -> f64 {
        4.0 * self.config.phase_duration
    }

    pub fn swing_order(&self) -> [LegId; 4] {
        std::array::from_fn(|k| self.phases[k].swing_leg)
    }

    /// Body-frame foot position at the start of `phase`.
    pub fn phase_start(&self, phase: usize, leg: LegId) -> Vector3<f64> {
        self.starts[phase % 4][leg.index()]
    }

    pub fn is_swinging(&self, leg: LegId, phase: usize) -> bool {
        self.phases[phase % 4].swing_leg == leg
    }

    /// Body-frame foot position of `leg` at fraction `s` of `phase`.
    pub fn foot_in_body(&self, leg: LegId, phase: usize, s: f64) -> Vector3<f64> {
        let ph = &self.phases[phase % 4];
        if ph.swing_leg == leg {
            ph.swing.at(s)
        } else {
            ph.body.carry(&self.phase_start(phase, leg), s)
        }
    }

    /// Whole-cycle body displacement in the cycle-start frame.
    pub fn cycle_motion(&self) -> BodyMotion {
        self.phases
            .iter()
            .fold(BodyMotion::default(), |acc, p| acc.then(&p.body))
    }

    /// Same feet, played backwards in time with the body motion undone.
    pub fn reversed(&self) -> GaitPlan {
        let phases = std::array::from_fn(|k| {
            let f = &self.phases[3 - k];
            Phase {
                swing_leg: f.swing_leg,
                swing: SwingPath {
                    start: f.swing.end,
                    end: f.swing.start,
                    apex_height: f.swing.apex_height,
                },
                body: f.body.inverse(),
            }
        });
        let starts = std::array::from_fn(|k| self.starts[(4 - k) % 4]);
        let direction = match self.direction {
            Direction::Forward => Direction::Backward,
            Direction::Backward => Direction::Forward,
            Direction::Left => Direction::Right,
            Direction::Right => Direction::Left,
        };
        GaitPlan {
            direction,
            phases,
            starts,
            config: self.config,
            workspaces: self.workspaces,
        }
    }
}

/// Foot target of `leg` at fraction `phase_time` of `phase`, in its shoulder frame.
pub fn foot_trajectory(leg: LegId, phase: usize, phase_time: f64, plan: &GaitPlan) -> FootPosition {
    plan.config
        .body_to_shoulder(leg, &plan.foot_in_body(leg, phase, phase_time))
}

/// Reachable forward interval of a leg at the standing pose, and its partition.
pub fn leg_workspace(cfg: &GaitConfig, g: &LegGeometry, leg: LegId) -> Result<LegWorkspace, GaitError> {
    let m = cfg.shoulder_mount(leg);
    let y = m.y + leg.outward_sign() * cfg.stance_y_offset;
    let feasible = |u: f64| {
        let p = Vector3::new(m.x + u, y, -cfg.body_height);
        inverse_kinematics(g, &cfg.body_to_shoulder(leg, &p), cfg.ik_branch).is_ok()
    };
    if !feasible(0.0) {
        return Err(GaitError::InfeasibleGait {
            leg,
            phase: 0,
            reason: "standing foot position beside the shoulder is unreachable".into(),
        });
    }
    let reach = g.total_length();
    let step = reach / 400.0;
    let edge = |dir: f64| {
        let mut inside = 0.0;
        let mut outside = None;
        let mut u = step;
        while u <= reach + step {
            if feasible(dir * u) {
                inside = u;
            } else {
                outside = Some(u);
                break;
            }
            u += step;
        }
        let Some(mut out) = outside else {
            return dir * inside;
        };
        for _ in 0..60 {
            let mid = 0.5 * (inside + out);
            if feasible(dir * mid) {
                inside = mid;
            } else {
                out = mid;
            }
        }
        dir * inside
    };
    let (lo, hi) = (edge(-1.0), edge(1.0));
    let unused = (1.0 - cfg.workspace_partition) * (hi - lo);
    let allowed = if leg.is_front() {
        (lo + unused, hi)
    } else {
        (lo, hi - unused)
    };
    Ok(LegWorkspace {
        reachable: (lo, hi),
        allowed,
    })
}

/// Samples per phase used when validating a freshly built plan.
const VALIDATION_SAMPLES: usize = 32;

/// Builds one periodic cycle for `direction`.
pub fn plan_cycle(cfg: &GaitConfig, g: &LegGeometry, direction: Direction) -> Result<GaitPlan, GaitError> {
    cfg.validate()?;
    g.validate().map_err(|e| GaitError::InvalidConfig(e.to_string()))?;
    if direction == Direction::Backward {
        return Ok(plan_cycle(cfg, g, Direction::Forward)?.reversed());
    }

    let workspaces: [LegWorkspace; 4] = {
        let mut w = Vec::with_capacity(4);
        for leg in LegId::ALL {
            w.push(leg_workspace(cfg, g, leg)?);
        }
        [w[0], w[1], w[2], w[3]]
    };

    let body = match direction {
        Direction::Forward => BodyMotion {
            dx: cfg.stride_length / 4.0,
            dy: 0.0,
            dyaw: 0.0,
        },
        Direction::Left => BodyMotion {
            dx: 0.0,
            dy: 0.0,
            dyaw: cfg.turn_per_cycle / 4.0,
        },
        Direction::Right => BodyMotion {
            dx: 0.0,
            dy: 0.0,
            dyaw: -cfg.turn_per_cycle / 4.0,
        },
        Direction::Backward => unreachable!(),
    };

    // Each foot lands at `swing_end`, is carried through three stance phases
    // and lifts off again; landing and lift-off straddle its home position.
    let swing_end: [Vector3<f64>; 4] = std::array::from_fn(|i| {
        let leg = LegId::ALL[i];
        let m = cfg.shoulder_mount(leg);
        let ws = &workspaces[i];
        let home = Vector2::new(
            m.x + 0.5 * (ws.allowed.0 + ws.allowed.1),
            m.y + leg.outward_sign() * cfg.stance_y_offset,
        );
        let xy = Rotation2::new(1.5 * body.dyaw) * home + 1.5 * body.translation();
        Vector3::new(xy.x, xy.y, -cfg.body_height)
    });
    let swing_index = |leg: LegId| {
        FORWARD_SEQUENCE
            .iter()
            .position(|&l| l == leg)
            .expect("leg in sequence")
    };

    let starts: [[Vector3<f64>; 4]; 4] = std::array::from_fn(|k| {
        std::array::from_fn(|i| {
            let leg = LegId::ALL[i];
            let carried = (k + 4 - swing_index(leg) - 1) % 4;
            (0..carried).fold(swing_end[i], |p, _| body.carry(&p, 1.0))
        })
    });
    let phases = std::array::from_fn(|k| {
        let leg = FORWARD_SEQUENCE[k];
        Phase {
            swing_leg: leg,
            swing: SwingPath {
                start: starts[k][leg.index()],
                end: swing_end[leg.index()],
                apex_height: cfg.step_height,
            },
            body,
        }
    });

    let plan = GaitPlan {
        direction,
        phases,
        starts,
        config: *cfg,
        workspaces,
    };
    validate_plan(&plan, g)?;
    Ok(plan)
}

/// Checks reachability and the workspace partition at sampled instants.
fn validate_plan(plan: &GaitPlan, g: &LegGeometry) -> Result<(), GaitError> {
    for phase in 0..4 {
        for i in 0..=VALIDATION_SAMPLES {
            let s = i as f64 / VALIDATION_SAMPLES as f64;
            for leg in LegId::ALL {
                let p = plan.foot_in_body(leg, phase, s);
                let u = p.x - plan.config.shoulder_mount(leg).x;
                if !plan.workspaces[leg.index()].contains(u) {
                    return Err(GaitError::InfeasibleGait {
                        leg,
                        phase,
                        reason: format!(
                            "forward offset {u:.4} m leaves the allowed interval {:?}",
                            plan.workspaces[leg.index()].allowed
                        ),
                    });
                }
                let target = plan.config.body_to_shoulder(leg, &p);
                if let Err(e) = inverse_kinematics(g, &target, plan.config.ik_branch) {
                    return Err(GaitError::InfeasibleGait {
                        leg,
                        phase,
                        reason: e.to_string(),
                    });
                }
            }
        }
    }
    Ok(())
}
