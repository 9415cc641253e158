use arachne_core::arena::{Bounds, GaussianSource, Obstacle, RobotPose, WorldState};
use arachne_core::sensors::{
    read_frame, smoke_read, temperature_read, ultrasonic_read, ultrasonic_truth, RandomStream, SensorsConfig,
    SmokeConfig, TemperatureConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Standard deviation of N(0, 0.02) truncated to (-0.05, 0.05), from the
/// closed-form truncated-normal variance.
const TRUNCATED_SIGMA: f64 = 0.019091949726891613;

fn hot_world() -> WorldState {
    let mut w = WorldState::empty(Bounds::new(0.0, 0.0, 4.0, 4.0));
    w.temperature.hot_spots.push(GaussianSource {
        x: 2.0,
        y: 2.0,
        amplitude: 40.0,
        sigma: 0.7,
    });
    w.smoke_sources.push(GaussianSource {
        x: 1.0,
        y: 3.0,
        amplitude: 1.2,
        sigma: 0.4,
    });
    w.obstacles.push(Obstacle::Circle {
        x: 3.0,
        y: 1.0,
        radius: 0.3,
    });
    w
}

#[test]
fn same_seed_same_readings() {
    let w = hot_world();
    let cfg = SensorsConfig::default();
    let poses: Vec<RobotPose> = (0..200)
        .map(|i| RobotPose::new(0.5 + 0.01 * i as f64, 1.0, 0.02 * i as f64, 0.2))
        .collect();
    let run = |seed| {
        let mut rng = RandomStream::new(seed);
        poses
            .iter()
            .map(|p| read_frame(&w, p, &cfg, &mut rng))
            .collect::<Vec<_>>()
    };
    let (a, b) = (run(11), run(11));
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.ultrasonic.distance.to_bits(), y.ultrasonic.distance.to_bits());
        assert_eq!(x.temperature.to_bits(), y.temperature.to_bits());
        assert_eq!(x.smoke, y.smoke);
    }
    assert_ne!(a, run(12));
}

#[test]
fn temperature_never_exceeds_bound() {
    let w = hot_world();
    let cfg = TemperatureConfig::default();
    let mut rng = RandomStream::new(7);
    let mut pick = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..100_000 {
        let p = RobotPose::new(pick.random_range(0.0..4.0), pick.random_range(0.0..4.0), 0.0, 0.2);
        let truth = w.temperature_at(&p.position());
        let r = temperature_read(&w, &p, &cfg, &mut rng);
        assert!(((r - truth) / truth).abs() < cfg.relative_error_bound);
    }
}

#[test]
fn temperature_mean_is_unbiased() {
    let w = hot_world();
    let p = RobotPose::new(2.0, 2.0, 0.0, 0.2);
    let truth = w.temperature_at(&p.position());
    let mut rng = RandomStream::new(21);
    let n = 10_000;
    let mean = (0..n)
        .map(|_| temperature_read(&w, &p, &TemperatureConfig::default(), &mut rng))
        .sum::<f64>()
        / n as f64;
    let tol = 3.0 * truth * TRUNCATED_SIGMA / (n as f64).sqrt();
    assert!((mean - truth).abs() < tol, "{mean} vs {truth} (tol {tol})");
}

#[test]
fn noiseless_trigger_is_monotone_in_distance() {
    let cfg = SensorsConfig::noiseless().ultrasonic;
    let mut rng = RandomStream::new(0);
    let mut last_triggered = true;
    for i in 0..400 {
        let gap = i as f64 * 0.001 + 0.1;
        let mut w = WorldState::empty(Bounds::new(-5.0, -5.0, 5.0, 5.0));
        w.obstacles.push(Obstacle::Circle {
            x: 0.2 + gap + 0.3,
            y: 0.0,
            radius: 0.3,
        });
        let pose = RobotPose::new(0.0, 0.0, 0.0, 0.2);
        assert!((ultrasonic_truth(&w, &pose, &cfg) - gap).abs() < 1e-12);
        let t = ultrasonic_read(&w, &pose, &cfg, &mut rng).triggered;
        // once a farther obstacle stops triggering, no farther one triggers again
        assert!(!t || last_triggered);
        last_triggered = t;
    }
}

#[test]
fn certain_smoke_detection_never_misses() {
    let w = hot_world();
    let cfg = SmokeConfig::default();
    let mut rng = RandomStream::new(4);
    let mut pick = ChaCha8Rng::seed_from_u64(5);
    let mut supra = 0;
    for _ in 0..20_000 {
        let p = RobotPose::new(pick.random_range(0.0..4.0), pick.random_range(0.0..4.0), 0.0, 0.2);
        let above = w.smoke_at(&p.position()) >= cfg.threshold;
        supra += above as usize;
        assert_eq!(smoke_read(&w, &p, &cfg, &mut rng), above);
    }
    assert!(supra > 100);
}
