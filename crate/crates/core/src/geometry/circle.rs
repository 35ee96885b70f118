use std::f64::consts::{PI, TAU};
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

/// A point in the plane, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_polar(radius: f64, angle: f64) -> Self {
        Self::new(radius * angle.cos(), radius * angle.sin())
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn dist(self, other: Point) -> f64 {
        (self - other).norm()
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    /// Rotates counter-clockwise about the origin.
    pub fn rotate(self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, k: f64) -> Point {
        Point::new(self.x * k, self.y * k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub center: Point,
    pub radius: f64,
}

impl Circle {
    pub fn new(center: Point, radius: f64) -> Self {
        debug_assert!(radius > 0.0 && center.x.is_finite() && center.y.is_finite());
        Self { center, radius }
    }

    pub fn area(&self) -> f64 {
        PI * self.radius * self.radius
    }

    /// Closed containment test.
    pub fn contains(&self, p: Point) -> bool {
        (p - self.center).norm_sq() <= self.radius * self.radius
    }

    /// The two boundary crossing points of two circles, if the boundaries
    /// cross.
    pub fn boundary_intersections(&self, other: &Circle) -> Option<(Point, Point)> {
        let d = self.center.dist(other.center);
        let (r1, r2) = (self.radius, other.radius);
        if d == 0.0 || d >= r1 + r2 || d <= (r1 - r2).abs() {
            return None;
        }
        let a = (r1 * r1 - r2 * r2 + d * d) / (2.0 * d);
        let h = (r1 * r1 - a * a).max(0.0).sqrt();
        let u = (other.center - self.center) * (1.0 / d);
        let base = self.center + u * a;
        let perp = Point::new(-u.y, u.x);
        Some((base + perp * h, base - perp * h))
    }
}

/// Area of the intersection of two disks.
///
/// With `R1 >= R2` and center distance `d`: zero when the disks are apart,
/// `pi R2^2` when the smaller one sits inside the larger, otherwise the lens
/// `acos(a/R1) R1^2 - a b + acos((d-a)/R2) R2^2 - b (d-a)` with
/// `a = (R1^2 - R2^2 + d^2) / 2d` and `b = sqrt(R1^2 - a^2)`.
pub fn two_circle_intersection_area(c1: &Circle, c2: &Circle) -> f64 {
    let (big, small) = if c1.radius >= c2.radius { (c1, c2) } else { (c2, c1) };
    let (r1, r2) = (big.radius, small.radius);
    let d = big.center.dist(small.center);
    if d >= r1 + r2 {
        return 0.0;
    }
    if d <= r1 - r2 {
        return PI * r2 * r2;
    }
    let a = (r1 * r1 - r2 * r2 + d * d) / (2.0 * d);
    let b = (r1 * r1 - a * a).max(0.0).sqrt();
    let t1 = (a / r1).clamp(-1.0, 1.0).acos() * r1 * r1 - a * b;
    let t2 = ((d - a) / r2).clamp(-1.0, 1.0).acos() * r2 * r2 - b * (d - a);
    (t1 + t2).max(0.0)
}

fn wrap_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

// Line integral of (x dy - y dx) / 2 along the arc theta0..theta1 of `c`.
fn arc_term(c: &Circle, theta0: f64, theta1: f64) -> f64 {
    let r = c.radius;
    let (s0, c0) = theta0.sin_cos();
    let (s1, c1) = theta1.sin_cos();
    0.5 * (r * r * (theta1 - theta0) + c.center.x * r * (s1 - s0) - c.center.y * r * (c1 - c0))
}

/// Closed half-plane `{p : normal . p <= offset}` with a unit `normal`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfPlane {
    pub normal: Point,
    pub offset: f64,
}

impl HalfPlane {
    /// Points at least as close to `a` as to `b`; bounded by the bisector.
    pub fn closer_to(a: Point, b: Point) -> Self {
        let normal = (b - a) * (1.0 / a.dist(b));
        Self {
            normal,
            offset: normal.dot((a + b) * 0.5),
        }
    }

    pub fn contains(&self, p: Point) -> bool {
        self.normal.dot(p) <= self.offset
    }
}

fn dedup_disks(disks: &[Circle]) -> Option<Vec<Circle>> {
    let mut uniq: Vec<Circle> = Vec::with_capacity(disks.len());
    for c in disks {
        if c.radius <= 0.0 {
            return None;
        }
        let scale = c.radius.max(c.center.norm()).max(1.0);
        let dup = uniq
            .iter()
            .any(|u| u.center.dist(c.center) <= 1e-12 * scale && (u.radius - c.radius).abs() <= 1e-12 * scale);
        if !dup {
            uniq.push(*c);
        }
    }
    Some(uniq)
}

/// Area of the common intersection of any number of disks.
///
/// Integrates `(x dy - y dx)/2` along the boundary arcs of each disk that lie
/// inside every other disk. Used for the distance-CDF areas, where a disk of
/// radius `d` around a base station is clipped against coverage circles and
/// the deployment disc.
pub fn disk_intersection_area(disks: &[Circle]) -> f64 {
    let Some(uniq) = dedup_disks(disks) else {
        return 0.0;
    };
    match uniq.len() {
        0 => 0.0,
        1 => uniq[0].area(),
        2 => two_circle_intersection_area(&uniq[0], &uniq[1]),
        _ => boundary_area(&uniq, &[]),
    }
}

/// Area of the intersection of disks and half-planes. At least one disk is
/// needed to keep the region bounded; with none the result is infinite.
pub fn clipped_disk_intersection_area(disks: &[Circle], planes: &[HalfPlane]) -> f64 {
    if planes.is_empty() {
        return disk_intersection_area(disks);
    }
    let Some(uniq) = dedup_disks(disks) else {
        return 0.0;
    };
    if uniq.is_empty() {
        return f64::INFINITY;
    }
    boundary_area(&uniq, planes)
}

fn boundary_area(disks: &[Circle], planes: &[HalfPlane]) -> f64 {
    for (i, a) in disks.iter().enumerate() {
        for b in &disks[i + 1..] {
            if a.center.dist(b.center) >= a.radius + b.radius {
                return 0.0;
            }
        }
        if planes.iter().any(|h| h.normal.dot(a.center) - a.radius >= h.offset) {
            return 0.0;
        }
    }

    let mut total = 0.0;
    'circles: for (i, ci) in disks.iter().enumerate() {
        // Allowed arcs of circle i: center direction and half-width.
        let mut windows: Vec<(f64, f64)> = Vec::new();
        for (j, cj) in disks.iter().enumerate() {
            if i == j {
                continue;
            }
            let d = ci.center.dist(cj.center);
            if d + ci.radius <= cj.radius {
                continue;
            }
            if d + cj.radius <= ci.radius {
                // Disk j lies inside disk i; no part of circle i bounds the intersection.
                continue 'circles;
            }
            let cos_half = (ci.radius * ci.radius + d * d - cj.radius * cj.radius) / (2.0 * ci.radius * d);
            windows.push(((cj.center - ci.center).angle(), cos_half.clamp(-1.0, 1.0).acos()));
        }
        for h in planes {
            // Boundary points satisfy cos(theta - angle(normal)) <= k.
            let k = (h.offset - h.normal.dot(ci.center)) / ci.radius;
            if k < 1.0 {
                windows.push((h.normal.angle() + PI, PI - k.max(-1.0).acos()));
            }
        }
        if windows.is_empty() {
            // Circle i lies inside every other set, so it is the intersection.
            return ci.area();
        }
        let mut cuts: Vec<f64> = Vec::with_capacity(2 * windows.len());
        for &(phi, half) in &windows {
            cuts.push((phi - half).rem_euclid(TAU));
            cuts.push((phi + half).rem_euclid(TAU));
        }
        cuts.sort_by(f64::total_cmp);
        for k in 0..cuts.len() {
            let t0 = cuts[k];
            let t1 = if k + 1 < cuts.len() { cuts[k + 1] } else { cuts[0] + TAU };
            if t1 - t0 <= 0.0 {
                continue;
            }
            let mid = 0.5 * (t0 + t1);
            let inside = windows.iter().all(|&(phi, half)| wrap_angle(mid - phi).abs() <= half);
            if inside {
                total += arc_term(ci, t0, t1);
            }
        }
    }

    // Straight edges, traversed with the region on their left.
    'planes: for (i, h) in planes.iter().enumerate() {
        let p0 = h.normal * h.offset;
        let dir = Point::new(-h.normal.y, h.normal.x);
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for c in disks {
            let off = h.normal.dot(c.center) - h.offset;
            if off.abs() >= c.radius {
                continue 'planes;
            }
            let half = (c.radius * c.radius - off * off).sqrt();
            let mid = dir.dot(c.center - p0);
            lo = lo.max(mid - half);
            hi = hi.min(mid + half);
        }
        for (j, g) in planes.iter().enumerate() {
            if i == j {
                continue;
            }
            let a = g.normal.dot(dir);
            let b = g.offset - g.normal.dot(p0);
            if a.abs() < 1e-15 {
                if b < 0.0 {
                    continue 'planes;
                }
            } else if a > 0.0 {
                hi = hi.min(b / a);
            } else {
                lo = lo.max(b / a);
            }
        }
        if hi > lo {
            let (p, q) = (p0 + dir * lo, p0 + dir * hi);
            total += 0.5 * (p.x * q.y - p.y * q.x);
        }
    }
    total.max(0.0)
}
