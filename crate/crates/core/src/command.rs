//! Operator commands, shared by the wire protocol and command scripts.

use serde::{Deserialize, Serialize};

use crate::arena::Obstacle;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    pub x: f64,
    pub y: f64,
    /// Arrival radius in meters; the simulation's default when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
}

/// Telemetry cadence overrides. Absent fields keep their current value.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature_period_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smoke_heartbeat_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pose_decimation: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub joints_decimation: Option<u32>,
}

impl RateOverrides {
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("temperature_period_s", self.temperature_period_s),
            ("smoke_heartbeat_s", self.smoke_heartbeat_s),
        ] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return Err(format!("{name} must be positive"));
                }
            }
        }
        for (name, v) in [
            ("pose_decimation", self.pose_decimation),
            ("joints_decimation", self.joints_decimation),
        ] {
            if v == Some(0) {
                return Err(format!("{name} must be at least 1"));
            }
        }
        Ok(())
    }
}

/// Telemetry publishing cadence, in simulated time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Cadence {
    pub temperature_period_s: f64,
    pub smoke_heartbeat_s: f64,
    /// Publish pose every n-th tick.
    pub pose_decimation: u32,
    /// Publish joint angles every n-th tick.
    pub joints_decimation: u32,
}

impl Default for Cadence {
    fn default() -> Self {
        Self {
            temperature_period_s: 0.5,
            smoke_heartbeat_s: 0.5,
            pose_decimation: 1,
            joints_decimation: 1,
        }
    }
}

impl Cadence {
    pub fn validate(&self) -> Result<(), String> {
        RateOverrides {
            temperature_period_s: Some(self.temperature_period_s),
            smoke_heartbeat_s: Some(self.smoke_heartbeat_s),
            pose_decimation: Some(self.pose_decimation),
            joints_decimation: Some(self.joints_decimation),
        }
        .validate()
    }

    pub fn apply(&mut self, o: &RateOverrides) {
        if let Some(v) = o.temperature_period_s {
            self.temperature_period_s = v;
        }
        if let Some(v) = o.smoke_heartbeat_s {
            self.smoke_heartbeat_s = v;
        }
        if let Some(v) = o.pose_decimation {
            self.pose_decimation = v;
        }
        if let Some(v) = o.joints_decimation {
            self.joints_decimation = v;
        }
    }

    /// A period in seconds as a whole number of ticks, at least one.
    pub fn period_ticks(period_s: f64, dt: f64) -> u64 {
        ((period_s / dt).round() as u64).max(1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "data", rename_all = "snake_case")]
pub enum Command {
    SetTask(TaskSpec),
    PlaceObstacle(Obstacle),
    Stop,
    SetRate(RateOverrides),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::SetTask(_) => "set_task",
            Command::PlaceObstacle(_) => "place_obstacle",
            Command::Stop => "stop",
            Command::SetRate(_) => "set_rate",
        }
    }
}

/// One scripted command, applied at the first tick boundary at or after `t_sim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptEntry(pub f64, pub Command);

pub fn parse_script(text: &str) -> Result<Vec<ScriptEntry>, serde_json::Error> {
    serde_json::from_str(text)
}
