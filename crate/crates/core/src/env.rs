//! Walking domain: exits with visibility disks, wall obstacles, and the
//! velocity cut-off used to keep agents out of walls.

use crate::{unit_or_zero, Error, Result, Vec2};

/// Half-width used for walls declared with zero thickness, so that they still
/// have an interior that a step can be tested against.
const MIN_HALF_WIDTH: f64 = 1e-9;

/// Fixed-point passes over the wall list when cutting off a velocity.
const PROJECTION_PASSES: usize = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct Exit {
    pub position: Vec2,
    /// Radius of the disk from which the exit is visible.
    pub visibility_radius: f64,
    /// Distance to `position` below which an agent counts as evacuated.
    pub capture_radius: f64,
}

impl Exit {
    pub fn new(position: Vec2, visibility_radius: f64, capture_radius: f64) -> Result<Self> {
        if !(visibility_radius > 0.0) || !(capture_radius > 0.0) {
            return Err(Error::Validation(format!(
                "exit at ({}, {}): visibility and capture radii must be positive",
                position.x, position.y
            )));
        }
        if capture_radius > visibility_radius {
            return Err(Error::Validation(format!(
                "exit at ({}, {}): capture radius {} exceeds visibility radius {}",
                position.x, position.y, capture_radius, visibility_radius
            )));
        }
        Ok(Self {
            position,
            visibility_radius,
            capture_radius,
        })
    }

    pub fn sees(&self, x: &Vec2) -> bool {
        (x - self.position).norm() < self.visibility_radius
    }

    pub fn captures(&self, x: &Vec2) -> bool {
        (x - self.position).norm() < self.capture_radius
    }
}

/// A straight wall: the rectangle of half-width `thickness` around the
/// segment `a`–`b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Wall {
    pub a: Vec2,
    pub b: Vec2,
    pub thickness: f64,
    frame: WallFrame,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
struct WallFrame {
    dir: Vec2,
    normal: Vec2,
    length: f64,
    half: f64,
}

impl Wall {
    pub fn new(a: Vec2, b: Vec2, thickness: f64) -> Result<Self> {
        let length = (b - a).norm();
        if !(length > 0.0) {
            return Err(Error::Validation(format!(
                "wall endpoints must be distinct, got ({}, {}) twice",
                a.x, a.y
            )));
        }
        if !(thickness >= 0.0) {
            return Err(Error::Validation(format!(
                "wall thickness must be non-negative, got {thickness}"
            )));
        }
        let dir = (b - a) / length;
        Ok(Self {
            a,
            b,
            thickness,
            frame: WallFrame {
                dir,
                normal: Vec2::new(-dir.y, dir.x),
                length,
                half: thickness.max(MIN_HALF_WIDTH),
            },
        })
    }

    /// Unit vector from `a` to `b`.
    pub fn direction(&self) -> Vec2 {
        self.frame.dir
    }

    fn local(&self, p: &Vec2) -> (f64, f64) {
        let d = p - self.a;
        (d.dot(&self.frame.dir), d.dot(&self.frame.normal))
    }

    /// Strict interior test.
    pub fn contains(&self, p: &Vec2) -> bool {
        let (u, w) = self.local(p);
        u > 0.0 && u < self.frame.length && w.abs() < self.frame.half
    }

    pub fn closest_point(&self, p: &Vec2) -> Vec2 {
        let (u, w) = self.local(p);
        let u = u.clamp(0.0, self.frame.length);
        let w = w.clamp(-self.frame.half, self.frame.half);
        self.a + self.frame.dir * u + self.frame.normal * w
    }

    /// Outward unit normal of the wall face closest to `p`.
    pub fn outward_normal(&self, p: &Vec2) -> Vec2 {
        let n = unit_or_zero(p - self.closest_point(p));
        if n != Vec2::zeros() {
            return n;
        }
        // On the boundary or inside: pick the nearest face.
        let (u, w) = self.local(p);
        let side = self.frame.half - w.abs();
        let start = u;
        let end = self.frame.length - u;
        if side <= start && side <= end {
            self.frame.normal * if w >= 0.0 { 1.0 } else { -1.0 }
        } else if start <= end {
            -self.frame.dir
        } else {
            self.frame.dir
        }
    }

    /// Whether the step from `p0` to `p1` passes through the open interior.
    pub fn step_enters(&self, p0: &Vec2, p1: &Vec2) -> bool {
        let (u0, w0) = self.local(p0);
        let (u1, w1) = self.local(p1);
        let mut t_in = 0.0_f64;
        let mut t_out = 1.0_f64;
        for (start, delta, lo, hi) in [
            (u0, u1 - u0, 0.0, self.frame.length),
            (w0, w1 - w0, -self.frame.half, self.frame.half),
        ] {
            if delta == 0.0 {
                if !(start > lo && start < hi) {
                    return false;
                }
            } else {
                let ta = (lo - start) / delta;
                let tb = (hi - start) / delta;
                let (enter, exit) = if ta < tb { (ta, tb) } else { (tb, ta) };
                t_in = t_in.max(enter);
                t_out = t_out.min(exit);
            }
        }
        t_in < t_out && t_out > 0.0 && t_in < 1.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    pub exits: Vec<Exit>,
    pub walls: Vec<Wall>,
    /// Tangential escape speed, relative to |v|, applied at wall corners.
    pub deadlock_nudge: f64,
}

impl Environment {
    pub fn new(exits: Vec<Exit>, walls: Vec<Wall>, deadlock_nudge: f64) -> Result<Self> {
        for (i, ei) in exits.iter().enumerate() {
            for (j, ej) in exits.iter().enumerate().skip(i + 1) {
                let d = (ei.position - ej.position).norm();
                if d < ei.visibility_radius + ej.visibility_radius {
                    return Err(Error::Validation(format!(
                        "visibility areas must be disjoint: exits {i} and {j} overlap \
                         (distance {d}, radii {} + {})",
                        ei.visibility_radius, ej.visibility_radius
                    )));
                }
            }
            if let Some(w) = walls.iter().position(|w| w.contains(&ei.position)) {
                return Err(Error::Validation(format!("exit {i} lies inside wall {w}")));
            }
        }
        if !(deadlock_nudge >= 0.0) {
            return Err(Error::Validation(format!(
                "deadlock nudge must be non-negative, got {deadlock_nudge}"
            )));
        }
        Ok(Self {
            exits,
            walls,
            deadlock_nudge,
        })
    }

    /// Index of the visibility area containing `x`, if any.
    pub fn visibility_indicator(&self, x: &Vec2) -> Option<usize> {
        self.exits.iter().position(|e| e.sees(x))
    }

    /// Index of the exit whose capture disk contains `x`, if any.
    pub fn capture_exit(&self, x: &Vec2) -> Option<usize> {
        self.exits.iter().position(|e| e.captures(x))
    }

    pub fn is_evacuated(&self, x: &Vec2) -> bool {
        self.capture_exit(x).is_some()
    }

    pub fn inside_wall(&self, x: &Vec2) -> Option<usize> {
        self.walls.iter().position(|w| w.contains(x))
    }

    fn step_blocked(&self, x: &Vec2, v: &Vec2, dt: f64) -> bool {
        let end = x + v * dt;
        self.walls.iter().any(|w| w.step_enters(x, &end))
    }

    /// Velocity cut-off: removes the components of `v` that would carry the
    /// step `x -> x + dt v` into a wall. When two walls cancel the whole
    /// velocity, a tangential nudge moves the agent out of the corner.
    pub fn project_velocity(&self, x: &Vec2, v: &Vec2, dt: f64) -> Vec2 {
        if self.walls.is_empty() {
            return *v;
        }
        let mut out = *v;
        let mut contacts: Vec<usize> = Vec::new();
        for _ in 0..PROJECTION_PASSES {
            let mut hit = false;
            let end = x + out * dt;
            for (i, wall) in self.walls.iter().enumerate() {
                if !wall.step_enters(x, &end) {
                    continue;
                }
                hit = true;
                if !contacts.contains(&i) {
                    contacts.push(i);
                }
                let n = wall.outward_normal(x);
                let vn = out.dot(&n);
                if vn < 0.0 {
                    out -= n * vn;
                }
                break;
            }
            if !hit {
                break;
            }
        }
        if self.step_blocked(x, &out, dt) {
            out = Vec2::zeros();
        }

        let speed = v.norm();
        if contacts.len() >= 2 && speed > 0.0 && out.norm() <= 1e-12 * speed {
            out = self.corner_escape(x, v, dt, &contacts);
        }
        out
    }

    fn corner_escape(&self, x: &Vec2, v: &Vec2, dt: f64, contacts: &[usize]) -> Vec2 {
        let magnitude = self.deadlock_nudge * v.norm();
        if magnitude == 0.0 {
            return Vec2::zeros();
        }
        let candidates = [(contacts[0], contacts[1]), (contacts[1], contacts[0])];
        for (along, other) in candidates {
            let t = self.walls[along].direction();
            let away = self.walls[other].outward_normal(x);
            let proj = t.dot(&away);
            let sign = if proj > 0.0 {
                1.0
            } else if proj < 0.0 {
                -1.0
            } else if t.dot(v) >= 0.0 {
                1.0
            } else {
                -1.0
            };
            let nudge = t * (sign * magnitude);
            if !self.step_blocked(x, &nudge, dt) {
                return nudge;
            }
        }
        Vec2::zeros()
    }
}
