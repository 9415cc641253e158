//! Ultrasonic range finder, smoke detector and temperature sensor models.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

use crate::arena::{sweep_disc, RobotPose, WorldState};

/// Seeded random source owned by the simulation loop.
#[derive(Debug, Clone)]
pub struct RandomStream {
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UltrasonicConfig {
    pub trigger_distance: f64,
    pub max_range: f64,
    pub noise_sigma: f64,
    pub detection_probability: f64,
}

impl Default for UltrasonicConfig {
    fn default() -> Self {
        Self {
            trigger_distance: 0.30,
            max_range: 3.0,
            noise_sigma: 0.005,
            detection_probability: 0.97,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmokeConfig {
    /// Concentration at or above which smoke is reported.
    pub threshold: f64,
    pub detection_probability: f64,
}

impl Default for SmokeConfig {
    fn default() -> Self {
        Self {
            threshold: 0.5,
            detection_probability: 1.0,
        }
    }
}

/// Multiplicative Gaussian error `T (1 + e)`, resampled until `|e| < relative_error_bound`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TemperatureConfig {
    pub noise_sigma: f64,
    pub relative_error_bound: f64,
}

impl Default for TemperatureConfig {
    fn default() -> Self {
        Self {
            noise_sigma: 0.02,
            relative_error_bound: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorsConfig {
    pub ultrasonic: UltrasonicConfig,
    pub smoke: SmokeConfig,
    pub temperature: TemperatureConfig,
}

impl SensorsConfig {
    /// Defaults with every noise source and dropout switched off.
    pub fn noiseless() -> Self {
        let d = Self::default();
        Self {
            ultrasonic: UltrasonicConfig {
                noise_sigma: 0.0,
                detection_probability: 1.0,
                ..d.ultrasonic
            },
            smoke: SmokeConfig {
                detection_probability: 1.0,
                ..d.smoke
            },
            temperature: TemperatureConfig {
                noise_sigma: 0.0,
                ..d.temperature
            },
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let u = &self.ultrasonic;
        let finite = |v: f64| v.is_finite();
        if !(u.trigger_distance > 0.0 && u.trigger_distance <= u.max_range && finite(u.max_range)) {
            return Err("ultrasonic: need 0 < trigger_distance <= max_range".into());
        }
        if !(u.noise_sigma >= 0.0 && finite(u.noise_sigma)) {
            return Err("ultrasonic.noise_sigma must be finite and >= 0".into());
        }
        if !(0.0..=1.0).contains(&u.detection_probability) {
            return Err("ultrasonic.detection_probability must be in [0, 1]".into());
        }
        if !finite(self.smoke.threshold) {
            return Err("smoke.threshold must be finite".into());
        }
        if !(0.0..=1.0).contains(&self.smoke.detection_probability) {
            return Err("smoke.detection_probability must be in [0, 1]".into());
        }
        let t = &self.temperature;
        if !(t.relative_error_bound > 0.0 && finite(t.relative_error_bound)) {
            return Err("temperature.relative_error_bound must be positive".into());
        }
        if !(t.noise_sigma >= 0.0 && finite(t.noise_sigma)) {
            return Err("temperature.noise_sigma must be finite and >= 0".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UltrasonicReading {
    pub distance: f64,
    pub triggered: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorFrame {
    pub timestamp: f64,
    pub ultrasonic: UltrasonicReading,
    pub smoke: bool,
    pub temperature: f64,
}

/// Free distance in front of the body along `angle`: how far the body disc can
/// move that way before touching anything. Walls count as obstacles.
pub fn clearance(world: &WorldState, pose: &RobotPose, angle: f64) -> f64 {
    sweep_disc(world, &pose.position(), angle, pose.body_radius)
}

/// Noiseless true range behind the ultrasonic reading, capped at `max_range`.
pub fn ultrasonic_truth(world: &WorldState, pose: &RobotPose, cfg: &UltrasonicConfig) -> f64 {
    clearance(world, pose, pose.heading).min(cfg.max_range)
}

/// Draws one noise sample and one dropout sample, in that order, on every call.
pub fn ultrasonic_read(
    world: &WorldState,
    pose: &RobotPose,
    cfg: &UltrasonicConfig,
    rng: &mut RandomStream,
) -> UltrasonicReading {
    let noise = cfg.noise_sigma * rng.standard_normal();
    let detected = rng.uniform() < cfg.detection_probability;
    let truth = ultrasonic_truth(world, pose, cfg);
    if !detected || truth >= cfg.max_range {
        return UltrasonicReading {
            distance: cfg.max_range,
            triggered: false,
        };
    }
    let distance = (truth + noise).clamp(0.0, cfg.max_range);
    UltrasonicReading {
        distance,
        triggered: distance <= cfg.trigger_distance,
    }
}

/// Draws one sample on every call.
pub fn smoke_read(world: &WorldState, pose: &RobotPose, cfg: &SmokeConfig, rng: &mut RandomStream) -> bool {
    let detected = rng.uniform() < cfg.detection_probability;
    detected && world.smoke_at(&pose.position()) >= cfg.threshold
}

/// Draws the relative error; at least one normal sample per call.
pub fn temperature_error(cfg: &TemperatureConfig, rng: &mut RandomStream) -> f64 {
    loop {
        let e = cfg.noise_sigma * rng.standard_normal();
        if e.abs() < cfg.relative_error_bound {
            return e;
        }
    }
}

pub fn temperature_read(world: &WorldState, pose: &RobotPose, cfg: &TemperatureConfig, rng: &mut RandomStream) -> f64 {
    let e = temperature_error(cfg, rng);
    world.temperature_at(&pose.position()) * (1.0 + e)
}

/// Reads all three sensors in a fixed order: ultrasonic, smoke, temperature.
pub fn read_frame(world: &WorldState, pose: &RobotPose, cfg: &SensorsConfig, rng: &mut RandomStream) -> SensorFrame {
    let ultrasonic = ultrasonic_read(world, pose, &cfg.ultrasonic, rng);
    let smoke = smoke_read(world, pose, &cfg.smoke, rng);
    let temperature = temperature_read(world, pose, &cfg.temperature, rng);
    SensorFrame {
        timestamp: world.time(),
        ultrasonic,
        smoke,
        temperature,
    }
}

/// Noiseless clearances to the left and right of the body, capped at `max_range`.
pub fn side_clearances(world: &WorldState, pose: &RobotPose, cfg: &UltrasonicConfig) -> (f64, f64) {
    let left = clearance(world, pose, pose.heading + FRAC_PI_2).min(cfg.max_range);
    let right = clearance(world, pose, pose.heading - FRAC_PI_2).min(cfg.max_range);
    (left, right)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arena::{Bounds, GaussianSource, Obstacle};

    fn world_with_wall_at(front_gap: f64) -> (WorldState, RobotPose) {
        let mut w = WorldState::empty(Bounds::new(-10.0, -10.0, 10.0, 10.0));
        let pose = RobotPose::new(0.0, 0.0, 0.0, 0.2);
        let x = 0.2 + front_gap;
        w.obstacles.push(Obstacle::Rect {
            min_x: x,
            min_y: -1.0,
            max_x: x + 0.1,
            max_y: 1.0,
        });
        (w, pose)
    }

    #[test]
    fn empty_arena_reads_max_range() {
        let w = WorldState::empty(Bounds::new(-10.0, -10.0, 10.0, 10.0));
        let pose = RobotPose::new(0.0, 0.0, 0.0, 0.2);
        let r = ultrasonic_read(&w, &pose, &UltrasonicConfig::default(), &mut RandomStream::new(1));
        assert_eq!(r.distance, 3.0);
        assert!(!r.triggered);
    }

    #[test]
    fn trigger_threshold_noiseless() {
        let cfg = SensorsConfig::noiseless().ultrasonic;
        let mut rng = RandomStream::new(1);
        let (w, p) = world_with_wall_at(0.25);
        let r = ultrasonic_read(&w, &p, &cfg, &mut rng);
        assert!((r.distance - 0.25).abs() < 1e-12 && r.triggered);
        let (w, p) = world_with_wall_at(0.35);
        assert!(!ultrasonic_read(&w, &p, &cfg, &mut rng).triggered);
        let (w, p) = world_with_wall_at(0.30);
        assert!(ultrasonic_read(&w, &p, &cfg, &mut rng).triggered);
    }

    #[test]
    fn dropout_reports_max_range() {
        let cfg = UltrasonicConfig {
            detection_probability: 0.0,
            ..UltrasonicConfig::default()
        };
        let (w, p) = world_with_wall_at(0.1);
        let r = ultrasonic_read(&w, &p, &cfg, &mut RandomStream::new(3));
        assert_eq!(
            r,
            UltrasonicReading {
                distance: 3.0,
                triggered: false
            }
        );
    }

    #[test]
    fn smoke_tie_counts() {
        let mut w = WorldState::empty(Bounds::new(-1.0, -1.0, 1.0, 1.0));
        let pose = RobotPose::new(0.0, 0.0, 0.0, 0.2);
        let mut rng = RandomStream::new(0);
        assert!(!smoke_read(&w, &pose, &SmokeConfig::default(), &mut rng));
        w.smoke_sources.push(GaussianSource {
            x: 0.0,
            y: 0.0,
            amplitude: 0.5,
            sigma: 0.2,
        });
        assert!(smoke_read(&w, &pose, &SmokeConfig::default(), &mut rng));
        let above = SmokeConfig {
            threshold: 0.5 + 1e-12,
            ..SmokeConfig::default()
        };
        assert!(!smoke_read(&w, &pose, &above, &mut rng));
    }

    #[test]
    fn temperature_noiseless_is_exact() {
        let w = WorldState::empty(Bounds::new(-1.0, -1.0, 1.0, 1.0));
        let pose = RobotPose::new(0.0, 0.0, 0.0, 0.2);
        let cfg = SensorsConfig::noiseless().temperature;
        assert_eq!(temperature_read(&w, &pose, &cfg, &mut RandomStream::new(5)), 25.0);
    }

    #[test]
    fn side_clearances_use_body_disc() {
        let w = WorldState::empty(Bounds::new(-1.0, -2.0, 1.0, 1.0));
        let pose = RobotPose::new(0.0, 0.0, 0.0, 0.2);
        let (l, r) = side_clearances(&w, &pose, &UltrasonicConfig::default());
        assert!((l - 0.8).abs() < 1e-12 && (r - 1.8).abs() < 1e-12);
    }

    #[test]
    fn validation() {
        assert!(SensorsConfig::default().validate().is_ok());
        let mut c = SensorsConfig::default();
        c.ultrasonic.trigger_distance = 4.0;
        assert!(c.validate().is_err());
        let mut c = SensorsConfig::default();
        c.temperature.relative_error_bound = 0.0;
        assert!(c.validate().is_err());
    }
}
