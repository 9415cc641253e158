//! Exact ray and swept-disc queries against the arena.

use nalgebra::Vector2;

use super::{Bounds, Obstacle, WorldState};

fn unit(angle: f64) -> Vector2<f64> {
    let (s, c) = angle.sin_cos();
    Vector2::new(c, s)
}

/// Distance from an interior point to the bounds along `dir`.
fn exit_distance(b: &Bounds, o: &Vector2<f64>, dir: &Vector2<f64>) -> f64 {
    let mut t = f64::INFINITY;
    if dir.x > 0.0 {
        t = t.min((b.max_x - o.x) / dir.x);
    } else if dir.x < 0.0 {
        t = t.min((b.min_x - o.x) / dir.x);
    }
    if dir.y > 0.0 {
        t = t.min((b.max_y - o.y) / dir.y);
    } else if dir.y < 0.0 {
        t = t.min((b.min_y - o.y) / dir.y);
    }
    t.max(0.0)
}

/// First non-negative hit of a ray on a circle; zero when starting inside.
fn ray_circle(o: &Vector2<f64>, dir: &Vector2<f64>, c: &Vector2<f64>, radius: f64) -> Option<f64> {
    let oc = o - c;
    let cc = oc.norm_squared() - radius * radius;
    if cc <= 0.0 {
        return Some(0.0);
    }
    let b = dir.dot(&oc);
    if b >= 0.0 {
        return None;
    }
    let disc = b * b - cc;
    if disc < 0.0 {
        return None;
    }
    // numerically stable smaller root: cc / q with q = -b + sqrt(disc)
    Some(cc / (-b + disc.sqrt()))
}

/// Slab test against an axis-aligned box; zero when starting inside.
fn ray_box(o: &Vector2<f64>, dir: &Vector2<f64>, min: Vector2<f64>, max: Vector2<f64>) -> Option<f64> {
    let mut t_enter = 0.0f64;
    let mut t_exit = f64::INFINITY;
    for axis in 0..2 {
        if dir[axis] == 0.0 {
            if o[axis] < min[axis] || o[axis] > max[axis] {
                return None;
            }
            continue;
        }
        let inv = 1.0 / dir[axis];
        let (mut t0, mut t1) = ((min[axis] - o[axis]) * inv, (max[axis] - o[axis]) * inv);
        if t0 > t1 {
            std::mem::swap(&mut t0, &mut t1);
        }
        t_enter = t_enter.max(t0);
        t_exit = t_exit.min(t1);
        if t_enter > t_exit {
            return None;
        }
    }
    Some(t_enter)
}

fn ray_obstacle(o: &Vector2<f64>, dir: &Vector2<f64>, obstacle: &Obstacle, inflate: f64) -> Option<f64> {
    match *obstacle {
        Obstacle::Circle { x, y, radius } => ray_circle(o, dir, &Vector2::new(x, y), radius + inflate),
        Obstacle::Rect {
            min_x,
            min_y,
            max_x,
            max_y,
        } => {
            if inflate == 0.0 {
                return ray_box(o, dir, Vector2::new(min_x, min_y), Vector2::new(max_x, max_y));
            }
            // rounded rectangle = two stretched boxes plus four corner circles
            let r = inflate;
            let boxes = [
                (Vector2::new(min_x - r, min_y), Vector2::new(max_x + r, max_y)),
                (Vector2::new(min_x, min_y - r), Vector2::new(max_x, max_y + r)),
            ];
            let corners = [
                Vector2::new(min_x, min_y),
                Vector2::new(min_x, max_y),
                Vector2::new(max_x, min_y),
                Vector2::new(max_x, max_y),
            ];
            boxes
                .iter()
                .filter_map(|(lo, hi)| ray_box(o, dir, *lo, *hi))
                .chain(corners.iter().filter_map(|c| ray_circle(o, dir, c, r)))
                .reduce(f64::min)
        }
    }
}

/// Distance along `angle` from `origin` to the nearest obstacle or wall.
pub fn raycast(world: &WorldState, origin: &Vector2<f64>, angle: f64) -> f64 {
    sweep_disc(world, origin, angle, 0.0)
}

/// How far a disc of `radius` centered at `origin` can travel along `angle`
/// before touching an obstacle or wall. Zero if it already touches one.
pub fn sweep_disc(world: &WorldState, origin: &Vector2<f64>, angle: f64, radius: f64) -> f64 {
    let dir = unit(angle);
    let b = &world.bounds;
    let inner = Bounds::new(b.min_x + radius, b.min_y + radius, b.max_x - radius, b.max_y - radius);
    if !inner.contains(origin) {
        return 0.0;
    }
    world
        .obstacles
        .iter()
        .filter_map(|ob| ray_obstacle(origin, &dir, ob, radius))
        .fold(exit_distance(&inner, origin, &dir), f64::min)
}

/// True iff a disc overlaps an obstacle or crosses the bounds.
pub fn disc_intersects(world: &WorldState, center: &Vector2<f64>, radius: f64) -> bool {
    let b = &world.bounds;
    if center.x - radius < b.min_x
        || center.x + radius > b.max_x
        || center.y - radius < b.min_y
        || center.y + radius > b.max_y
    {
        return true;
    }
    world.obstacles.iter().any(|ob| ob.distance_to(center) < radius)
}
