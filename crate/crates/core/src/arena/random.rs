//! Seeded random arenas with a guaranteed minimum free gap.

use nalgebra::Vector2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Arena, Bounds, Obstacle, RobotStart, WorldState};

#[derive(Debug, Clone, PartialEq)]
pub struct RandomArenaParams {
    pub bounds: Bounds,
    pub start: RobotStart,
    pub goal: Vector2<f64>,
    /// Inclusive range of obstacle counts.
    pub obstacles: (usize, usize),
    /// Circle radius and rectangle half-side range.
    pub size: (f64, f64),
    /// Every pair of obstacles, and every obstacle and wall, is separated by
    /// more than this.
    pub min_gap: f64,
    /// Free radius kept around start and goal.
    pub keep_clear: f64,
}

impl Default for RandomArenaParams {
    fn default() -> Self {
        Self {
            bounds: Bounds::new(0.0, 0.0, 8.0, 4.0),
            start: RobotStart {
                x: 0.8,
                y: 2.0,
                heading_deg: 0.0,
            },
            goal: Vector2::new(7.2, 2.0),
            obstacles: (3, 6),
            size: (0.15, 0.4),
            min_gap: 0.8,
            keep_clear: 0.8,
        }
    }
}

/// Separation between two obstacles (zero on overlap).
pub fn obstacle_gap(a: &Obstacle, b: &Obstacle) -> f64 {
    match (*a, *b) {
        (Obstacle::Circle { x, y, radius }, other) | (other, Obstacle::Circle { x, y, radius }) => {
            (other.distance_to(&Vector2::new(x, y)) - radius).max(0.0)
        }
        (
            Obstacle::Rect {
                min_x: ax0,
                min_y: ay0,
                max_x: ax1,
                max_y: ay1,
            },
            Obstacle::Rect {
                min_x: bx0,
                min_y: by0,
                max_x: bx1,
                max_y: by1,
            },
        ) => {
            let dx = (ax0 - bx1).max(bx0 - ax1).max(0.0);
            let dy = (ay0 - by1).max(by0 - ay1).max(0.0);
            dx.hypot(dy)
        }
    }
}

/// Smallest distance from the obstacle to any wall.
pub fn wall_gap(ob: &Obstacle, b: &Bounds) -> f64 {
    let (x0, y0, x1, y1) = match *ob {
        Obstacle::Rect {
            min_x,
            min_y,
            max_x,
            max_y,
        } => (min_x, min_y, max_x, max_y),
        Obstacle::Circle { x, y, radius } => (x - radius, y - radius, x + radius, y + radius),
    };
    (x0 - b.min_x).min(y0 - b.min_y).min(b.max_x - x1).min(b.max_y - y1)
}

/// Rejection-samples circles and rectangles anywhere inside the bounds.
///
/// The same seed always gives the same arena. Fewer obstacles than requested
/// are placed if the space runs out.
pub fn random_arena(seed: u64, p: &RandomArenaParams) -> Arena {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = p.bounds;
    let want = rng.random_range(p.obstacles.0..=p.obstacles.1);
    let start = Vector2::new(p.start.x, p.start.y);
    let mut placed: Vec<Obstacle> = Vec::with_capacity(want);
    let mut attempts = 0;
    while placed.len() < want && attempts < 10_000 {
        attempts += 1;
        let size = rng.random_range(p.size.0..=p.size.1);
        let cx = rng.random_range(b.min_x..b.max_x);
        let cy = rng.random_range(b.min_y..b.max_y);
        let ob = if rng.random_bool(0.5) {
            Obstacle::Circle {
                x: cx,
                y: cy,
                radius: size,
            }
        } else {
            let aspect: f64 = rng.random_range(0.5..=2.0);
            let (hx, hy) = (size * aspect.sqrt(), size / aspect.sqrt());
            Obstacle::Rect {
                min_x: cx - hx,
                min_y: cy - hy,
                max_x: cx + hx,
                max_y: cy + hy,
            }
        };
        let ok = wall_gap(&ob, &b) > p.min_gap
            && ob.distance_to(&start) > p.keep_clear
            && ob.distance_to(&p.goal) > p.keep_clear
            && placed.iter().all(|o| obstacle_gap(o, &ob) > p.min_gap);
        if ok {
            placed.push(ob);
        }
    }
    let mut world = WorldState::empty(b);
    world.obstacles = placed;
    Arena::new(world, p.start).expect("generated arena is valid")
}
