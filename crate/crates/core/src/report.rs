//! Sensor accuracy report.
//!
//! Each trial builds a small bench scene with a known truth, places the robot
//! at a random pose and compares one reading against that truth.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::arena::{Bounds, GaussianSource, Obstacle, RobotPose, WorldState};
use crate::sensors::{smoke_read, temperature_read, ultrasonic_read, RandomStream, SensorsConfig};

/// Below this truth magnitude (°C) the temperature error is taken as absolute.
pub const RELATIVE_ERROR_FLOOR_C: f64 = 1.0;

const BENCH: Bounds = Bounds {
    min_x: 0.0,
    min_y: 0.0,
    max_x: 10.0,
    max_y: 10.0,
};
const TARGET_RADIUS: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemperatureStats {
    pub max_relative_error: f64,
    pub mean_relative_error: f64,
    pub relative_samples: u32,
    /// Worst absolute error in °C over truths near zero.
    pub max_absolute_error_c: f64,
    pub absolute_samples: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateStats {
    pub trials: u32,
    pub detected: u32,
    pub detection_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UltrasonicStats {
    #[serde(flatten)]
    pub rate: RateStats,
    pub configured_probability: f64,
    /// Obstacles were placed at clearances in `[min, max]` meters.
    pub clearance_min: f64,
    pub clearance_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorReport {
    pub trials: u32,
    pub seed: u64,
    pub temperature: TemperatureStats,
    pub ultrasonic: UltrasonicStats,
    pub smoke: RateStats,
}

impl SensorReport {
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "sensor       metric                  value");
        let _ = writeln!(
            s,
            "temperature  max relative error      {:.4}%",
            self.temperature.max_relative_error * 100.0
        );
        let _ = writeln!(
            s,
            "temperature  mean relative error     {:.4}%",
            self.temperature.mean_relative_error * 100.0
        );
        let _ = writeln!(
            s,
            "temperature  max abs error near 0 C  {:.4} C ({} samples)",
            self.temperature.max_absolute_error_c, self.temperature.absolute_samples
        );
        let _ = writeln!(
            s,
            "ultrasonic   detection rate          {:.4} ({}/{})",
            self.ultrasonic.rate.detection_rate, self.ultrasonic.rate.detected, self.ultrasonic.rate.trials
        );
        let _ = writeln!(
            s,
            "smoke        detection rate          {:.4} ({}/{})",
            self.smoke.detection_rate, self.smoke.detected, self.smoke.trials
        );
        s
    }
}

fn rate(detected: u32, trials: u32) -> RateStats {
    RateStats {
        trials,
        detected,
        detection_rate: f64::from(detected) / f64::from(trials),
    }
}

fn between(rng: &mut RandomStream, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.uniform()
}

/// Runs `trials` comparisons per sensor. Scene sampling and sensor noise use
/// separate streams derived from `seed`.
///
/// Ultrasonic obstacles sit straight ahead at clearances up to four noise
/// sigmas short of the trigger distance, so misses come from dropouts only.
/// Smoke trials put the robot where the concentration is above threshold.
///
/// # Panics
/// If `trials` is zero.
pub fn sensor_accuracy_report(cfg: &SensorsConfig, body_radius: f64, trials: u32, seed: u64) -> SensorReport {
    assert!(trials > 0, "at least one trial");
    let mut scene = RandomStream::new(seed);
    let mut noise = RandomStream::new(seed ^ 0x5EED_5EED_5EED_5EED);

    let (mut max_rel, mut sum_rel, mut n_rel) = (0.0f64, 0.0f64, 0u32);
    let (mut max_abs, mut n_abs) = (0.0f64, 0u32);
    for _ in 0..trials {
        let mut world = WorldState::empty(BENCH);
        world.temperature.ambient = between(&mut scene, -10.0, 60.0);
        world.temperature.hot_spots.push(GaussianSource {
            x: 5.0,
            y: 5.0,
            amplitude: between(&mut scene, 0.0, 40.0),
            sigma: 1.5,
        });
        let pose = RobotPose::new(
            between(&mut scene, 2.0, 8.0),
            between(&mut scene, 2.0, 8.0),
            0.0,
            body_radius,
        );
        let truth = world.temperature_at(&pose.position());
        let err = (temperature_read(&world, &pose, &cfg.temperature, &mut noise) - truth).abs();
        if truth.abs() < RELATIVE_ERROR_FLOOR_C {
            max_abs = max_abs.max(err);
            n_abs += 1;
        } else {
            let rel = err / truth.abs();
            max_rel = max_rel.max(rel);
            sum_rel += rel;
            n_rel += 1;
        }
    }

    let us = &cfg.ultrasonic;
    let (c_min, c_max) = (0.02, us.trigger_distance - 4.0 * us.noise_sigma);
    let mut us_hits = 0;
    for _ in 0..trials {
        let mut world = WorldState::empty(BENCH);
        let pose = RobotPose::new(5.0, 5.0, between(&mut scene, -PI, PI), body_radius);
        let c = between(&mut scene, c_min, c_max);
        let d = body_radius + c + TARGET_RADIUS;
        world.obstacles.push(Obstacle::Circle {
            x: pose.x + d * pose.heading.cos(),
            y: pose.y + d * pose.heading.sin(),
            radius: TARGET_RADIUS,
        });
        if ultrasonic_read(&world, &pose, us, &mut noise).triggered {
            us_hits += 1;
        }
    }

    let mut smoke_hits = 0;
    for _ in 0..trials {
        let mut world = WorldState::empty(BENCH);
        let source = GaussianSource {
            x: 5.0,
            y: 5.0,
            amplitude: cfg.smoke.threshold * between(&mut scene, 1.5, 4.0),
            sigma: 0.5,
        };
        world.smoke_sources.push(source);
        // the concentration equals the threshold at this radius
        let edge = source.sigma * (2.0 * (source.amplitude / cfg.smoke.threshold).ln()).sqrt();
        let r = 0.9 * edge * scene.uniform().sqrt();
        let a = between(&mut scene, -PI, PI);
        let p = Vector2::new(source.x, source.y) + r * Vector2::new(a.cos(), a.sin());
        let pose = RobotPose::new(p.x, p.y, 0.0, body_radius);
        if smoke_read(&world, &pose, &cfg.smoke, &mut noise) {
            smoke_hits += 1;
        }
    }

    SensorReport {
        trials,
        seed,
        temperature: TemperatureStats {
            max_relative_error: max_rel,
            mean_relative_error: if n_rel > 0 { sum_rel / f64::from(n_rel) } else { 0.0 },
            relative_samples: n_rel,
            max_absolute_error_c: max_abs,
            absolute_samples: n_abs,
        },
        ultrasonic: UltrasonicStats {
            rate: rate(us_hits, trials),
            configured_probability: us.detection_probability,
            clearance_min: c_min,
            clearance_max: c_max,
        },
        smoke: rate(smoke_hits, trials),
    }
}
