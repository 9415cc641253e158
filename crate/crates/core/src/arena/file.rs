//! JSON arena documents.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Bounds, GaussianSource, Obstacle, SimulationTick, TemperatureField, WorldState};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ArenaError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid {entity}: {message}")]
    Validation { entity: String, message: String },
}

impl ArenaError {
    fn invalid(entity: impl Into<String>, message: impl Into<String>) -> Self {
        ArenaError::Validation {
            entity: entity.into(),
            message: message.into(),
        }
    }
}

/// Initial robot placement. Heading in degrees, as stored in files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotStart {
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub heading_deg: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Arena {
    pub world: WorldState,
    pub robot_start: RobotStart,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    bounds: Bounds,
    #[serde(default)]
    obstacles: Vec<Obstacle>,
    #[serde(default)]
    smoke_sources: Vec<GaussianSource>,
    #[serde(default)]
    temperature: TemperatureField,
    #[serde(default)]
    robot_start: Option<RobotStart>,
}

fn check_source(entity: String, s: &GaussianSource) -> Result<(), ArenaError> {
    if ![s.x, s.y, s.amplitude, s.sigma].iter().all(|v| v.is_finite()) {
        return Err(ArenaError::invalid(entity, "non-finite value"));
    }
    if s.sigma <= 0.0 {
        return Err(ArenaError::invalid(entity, "sigma must be positive"));
    }
    Ok(())
}

impl Arena {
    pub fn new(world: WorldState, robot_start: RobotStart) -> Result<Self, ArenaError> {
        let arena = Arena { world, robot_start };
        arena.validate()?;
        Ok(arena)
    }

    pub fn validate(&self) -> Result<(), ArenaError> {
        let w = &self.world;
        let b = &w.bounds;
        if ![b.min_x, b.min_y, b.max_x, b.max_y].iter().all(|v| v.is_finite()) {
            return Err(ArenaError::invalid("bounds", "non-finite value"));
        }
        if !(b.min_x < b.max_x && b.min_y < b.max_y) {
            return Err(ArenaError::invalid("bounds", "min must be strictly less than max"));
        }
        for (i, ob) in w.obstacles.iter().enumerate() {
            ob.check(b)
                .map_err(|m| ArenaError::invalid(format!("obstacles[{i}]"), m))?;
        }
        for (i, s) in w.smoke_sources.iter().enumerate() {
            check_source(format!("smoke_sources[{i}]"), s)?;
        }
        if !w.temperature.ambient.is_finite() {
            return Err(ArenaError::invalid("temperature.ambient", "non-finite value"));
        }
        for (i, s) in w.temperature.hot_spots.iter().enumerate() {
            check_source(format!("temperature.hot_spots[{i}]"), s)?;
        }
        let r = &self.robot_start;
        if ![r.x, r.y, r.heading_deg].iter().all(|v| v.is_finite()) {
            return Err(ArenaError::invalid("robot_start", "non-finite value"));
        }
        if !b.contains(&nalgebra::Vector2::new(r.x, r.y)) {
            return Err(ArenaError::invalid("robot_start", "outside the arena bounds"));
        }
        Ok(())
    }
}

/// Parses and validates an arena document. A missing `robot_start` places the
/// robot at the bounds center facing +x.
pub fn load_arena(document: &str) -> Result<Arena, ArenaError> {
    let doc: Document = serde_json::from_str(document).map_err(|e| {
        let text = e.to_string();
        let position = format!(" at line {} column {}", e.line(), e.column());
        ArenaError::Parse {
            line: e.line(),
            column: e.column(),
            message: text.strip_suffix(&position).unwrap_or(&text).to_string(),
        }
    })?;
    let c = doc.bounds.center();
    let robot_start = doc.robot_start.unwrap_or(RobotStart {
        x: c.x,
        y: c.y,
        heading_deg: 0.0,
    });
    let world = WorldState {
        bounds: doc.bounds,
        obstacles: doc.obstacles,
        smoke_sources: doc.smoke_sources,
        temperature: doc.temperature,
        clock: SimulationTick::default(),
    };
    Arena::new(world, robot_start)
}

/// Canonical form: every key present, fixed key order, two-space indent, trailing LF.
pub fn save_arena(arena: &Arena) -> String {
    let w = &arena.world;
    let doc = Document {
        bounds: w.bounds,
        obstacles: w.obstacles.clone(),
        smoke_sources: w.smoke_sources.clone(),
        temperature: w.temperature.clone(),
        robot_start: Some(arena.robot_start),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("arena serializes");
    s.push('\n');
    s
}
