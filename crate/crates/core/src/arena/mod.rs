//! Planar world: rectangular bounds, rectangle and circle obstacles, smoke and
//! temperature fields, and the exact geometric queries the sensors rely on.

mod file;
mod geometry;
mod random;

use nalgebra::{Rotation2, Vector2};
use serde::{Deserialize, Serialize};

use crate::gait::BodyMotion;
use crate::kinematics::normalize_angle;

pub use file::{load_arena, save_arena, Arena, ArenaError, RobotStart};
pub use geometry::{disc_intersects, raycast, sweep_disc};
pub use random::{obstacle_gap, random_arena, wall_gap, RandomArenaParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bounds {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Bounds {
    pub fn new(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Self {
        Self {
            min_x,
            min_y,
            max_x,
            max_y,
        }
    }

    pub fn contains(&self, p: &Vector2<f64>) -> bool {
        p.x >= self.min_x && p.x <= self.max_x && p.y >= self.min_y && p.y <= self.max_y
    }

    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }

    pub fn center(&self) -> Vector2<f64> {
        Vector2::new(0.5 * (self.min_x + self.max_x), 0.5 * (self.min_y + self.max_y))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Obstacle {
    Rect {
        min_x: f64,
        min_y: f64,
        max_x: f64,
        max_y: f64,
    },
    Circle {
        x: f64,
        y: f64,
        radius: f64,
    },
}

impl Obstacle {
    pub fn is_finite(&self) -> bool {
        match *self {
            Obstacle::Rect {
                min_x,
                min_y,
                max_x,
                max_y,
            } => [min_x, min_y, max_x, max_y].iter().all(|v| v.is_finite()),
            Obstacle::Circle { x, y, radius } => [x, y, radius].iter().all(|v| v.is_finite()),
        }
    }

    /// Validity of the shape itself and containment in `bounds`.
    pub fn check(&self, bounds: &Bounds) -> Result<(), String> {
        if !self.is_finite() {
            return Err("non-finite coordinate".into());
        }
        match *self {
            Obstacle::Rect {
                min_x,
                min_y,
                max_x,
                max_y,
            } => {
                if !(min_x < max_x && min_y < max_y) {
                    return Err("rectangle has no area".into());
                }
                if min_x < bounds.min_x || min_y < bounds.min_y || max_x > bounds.max_x || max_y > bounds.max_y {
                    return Err("rectangle extends outside the arena bounds".into());
                }
            }
            Obstacle::Circle { x, y, radius } => {
                if !(radius > 0.0) {
                    return Err("circle radius must be positive".into());
                }
                if x - radius < bounds.min_x
                    || x + radius > bounds.max_x
                    || y - radius < bounds.min_y
                    || y + radius > bounds.max_y
                {
                    return Err("circle extends outside the arena bounds".into());
                }
            }
        }
        Ok(())
    }

    /// Distance from `p` to the shape (zero inside).
    pub fn distance_to(&self, p: &Vector2<f64>) -> f64 {
        match *self {
            Obstacle::Rect {
                min_x,
                min_y,
                max_x,
                max_y,
            } => {
                let dx = (min_x - p.x).max(0.0).max(p.x - max_x);
                let dy = (min_y - p.y).max(0.0).max(p.y - max_y);
                dx.hypot(dy)
            }
            Obstacle::Circle { x, y, radius } => ((p.x - x).hypot(p.y - y) - radius).max(0.0),
        }
    }
}

/// Isotropic Gaussian bump `amplitude * exp(-d^2 / (2 sigma^2))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianSource {
    pub x: f64,
    pub y: f64,
    pub amplitude: f64,
    pub sigma: f64,
}

impl GaussianSource {
    pub fn value_at(&self, p: &Vector2<f64>) -> f64 {
        let d2 = (p.x - self.x).powi(2) + (p.y - self.y).powi(2);
        self.amplitude * (-d2 / (2.0 * self.sigma * self.sigma)).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemperatureField {
    /// Degrees Celsius.
    pub ambient: f64,
    #[serde(default)]
    pub hot_spots: Vec<GaussianSource>,
}

impl Default for TemperatureField {
    fn default() -> Self {
        Self {
            ambient: 25.0,
            hot_spots: Vec::new(),
        }
    }
}

/// Discrete simulation clock; time is always `index * dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationTick {
    pub dt: f64,
    pub index: u64,
}

impl SimulationTick {
    pub const DEFAULT_DT: f64 = 0.02;

    pub fn new(dt: f64) -> Self {
        assert!(dt > 0.0 && dt.is_finite(), "tick length must be positive");
        Self { dt, index: 0 }
    }

    pub fn seconds(&self) -> f64 {
        self.index as f64 * self.dt
    }
}

impl Default for SimulationTick {
    fn default() -> Self {
        Self::new(Self::DEFAULT_DT)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub bounds: Bounds,
    pub obstacles: Vec<Obstacle>,
    pub smoke_sources: Vec<GaussianSource>,
    pub temperature: TemperatureField,
    pub clock: SimulationTick,
}

impl WorldState {
    pub fn empty(bounds: Bounds) -> Self {
        Self {
            bounds,
            obstacles: Vec::new(),
            smoke_sources: Vec::new(),
            temperature: TemperatureField::default(),
            clock: SimulationTick::default(),
        }
    }

    pub fn time(&self) -> f64 {
        self.clock.seconds()
    }

    pub fn smoke_at(&self, p: &Vector2<f64>) -> f64 {
        self.smoke_sources.iter().map(|s| s.value_at(p)).sum()
    }

    pub fn temperature_at(&self, p: &Vector2<f64>) -> f64 {
        self.temperature.ambient + self.temperature.hot_spots.iter().map(|s| s.value_at(p)).sum::<f64>()
    }

    /// Adds an obstacle after checking it against the bounds.
    pub fn place_obstacle(&mut self, obstacle: Obstacle) -> Result<(), String> {
        obstacle.check(&self.bounds)?;
        self.obstacles.push(obstacle);
        Ok(())
    }
}

/// Robot body as a disc in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotPose {
    pub x: f64,
    pub y: f64,
    /// Radians in (-pi, pi].
    pub heading: f64,
    pub body_radius: f64,
}

impl RobotPose {
    pub fn new(x: f64, y: f64, heading: f64, body_radius: f64) -> Self {
        Self {
            x,
            y,
            heading: normalize_angle(heading),
            body_radius,
        }
    }

    pub fn position(&self) -> Vector2<f64> {
        Vector2::new(self.x, self.y)
    }

    /// Pose reached after fraction `progress` of a phase with body motion `motion`,
    /// starting from `self` at phase start.
    pub fn after(&self, motion: &BodyMotion, progress: f64) -> RobotPose {
        let (t, yaw) = motion.at(progress);
        let p = self.position() + Rotation2::new(self.heading) * t;
        RobotPose::new(p.x, p.y, self.heading + yaw, self.body_radius)
    }
}

/// Outcome of one simulation tick of body motion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Advance {
    pub pose: RobotPose,
    pub collision: bool,
}

/// Moves the body to `progress` of the current phase and advances the clock by one tick.
///
/// `motion` is `None` while halted. Poses are evaluated from the phase-start
/// pose rather than integrated incrementally, so a completed phase lands on
/// exactly the planned displacement.
pub fn advance(world: &mut WorldState, phase_start: &RobotPose, motion: Option<&BodyMotion>, progress: f64) -> Advance {
    let pose = match motion {
        Some(m) => phase_start.after(m, progress),
        None => *phase_start,
    };
    world.clock.index += 1;
    let collision = disc_intersects(world, &pose.position(), pose.body_radius);
    Advance { pose, collision }
}
