//! Joint angle to servo pulse width.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::{JointAngles, JointLimit};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ServoError {
    #[error("angle {angle} rad outside servo range [{min}, {max}]")]
    OutOfRange { angle: f64, min: f64, max: f64 },
    #[error("invalid servo config: {0}")]
    InvalidConfig(String),
}

/// Affine pulse mapping of one hobby servo.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServoConfig {
    pub pulse_min_us: f64,
    pub pulse_max_us: f64,
    /// Angle commanded by `pulse_min_us` (rad; degrees in files).
    #[serde(rename = "angle_min_deg", with = "crate::units::degrees")]
    pub angle_min: f64,
    /// Angle commanded by `pulse_max_us` (rad; degrees in files).
    #[serde(rename = "angle_max_deg", with = "crate::units::degrees")]
    pub angle_max: f64,
    pub period_ms: f64,
}

impl Default for ServoConfig {
    /// 500-2500 us over 180 degrees centered on zero, 50 Hz frame.
    fn default() -> Self {
        Self::centered_on(0.0)
    }
}

impl ServoConfig {
    /// Default pulse range spanning 180 degrees around `center` (rad).
    pub fn centered_on(center: f64) -> Self {
        Self {
            pulse_min_us: 500.0,
            pulse_max_us: 2500.0,
            angle_min: center - FRAC_PI_2,
            angle_max: center + FRAC_PI_2,
            period_ms: 20.0,
        }
    }

    pub fn validate(&self) -> Result<(), ServoError> {
        if !(self.pulse_min_us >= 0.0 && self.pulse_min_us < self.pulse_max_us) {
            return Err(ServoError::InvalidConfig(format!(
                "pulse range [{}, {}] us is empty",
                self.pulse_min_us, self.pulse_max_us
            )));
        }
        if !(self.period_ms * 1000.0 > self.pulse_max_us) {
            return Err(ServoError::InvalidConfig(format!(
                "period {} ms is shorter than the longest pulse",
                self.period_ms
            )));
        }
        if !(self.angle_min.is_finite() && self.angle_max.is_finite() && self.angle_min < self.angle_max) {
            return Err(ServoError::InvalidConfig(format!(
                "angle range [{}, {}] is empty",
                self.angle_min, self.angle_max
            )));
        }
        Ok(())
    }

    pub fn covers(&self, limit: &JointLimit) -> bool {
        limit.min >= self.angle_min - 1e-12 && limit.max <= self.angle_max + 1e-12
    }
}

/// Pulse width in microseconds commanding angle `q`, rounded to the nearest microsecond.
pub fn angle_to_pulse(q: f64, sc: &ServoConfig) -> Result<u32, ServoError> {
    const SLACK: f64 = 1e-12;
    if !(q >= sc.angle_min - SLACK && q <= sc.angle_max + SLACK) {
        return Err(ServoError::OutOfRange {
            angle: q,
            min: sc.angle_min,
            max: sc.angle_max,
        });
    }
    let frac = ((q - sc.angle_min) / (sc.angle_max - sc.angle_min)).clamp(0.0, 1.0);
    Ok((sc.pulse_min_us + frac * (sc.pulse_max_us - sc.pulse_min_us)).round() as u32)
}

/// Servo mapping for the three joints of a leg (shared by all four legs).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointServos(pub [ServoConfig; 3]);

impl Default for JointServos {
    /// The knee servo is offset so its 180 degrees cover the folded range.
    fn default() -> Self {
        Self([
            ServoConfig::default(),
            ServoConfig::default(),
            ServoConfig::centered_on(-80f64.to_radians()),
        ])
    }
}

impl JointServos {
    pub fn pulses(&self, q: &JointAngles) -> Result<[u32; 3], ServoError> {
        let a = q.as_array();
        Ok([
            angle_to_pulse(a[0], &self.0[0])?,
            angle_to_pulse(a[1], &self.0[1])?,
            angle_to_pulse(a[2], &self.0[2])?,
        ])
    }
}
