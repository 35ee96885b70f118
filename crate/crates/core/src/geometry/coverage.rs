use std::f64::consts::{LN_10, TAU};

use serde::{Deserialize, Serialize};

use super::circle::{
    clipped_disk_intersection_area, disk_intersection_area, two_circle_intersection_area, Circle, HalfPlane, Point,
};
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::quadrature;
use crate::scenario::UserType;

/// Absolute tolerance (m^2) for the quadrature behind the triple overlap.
pub const OVERLAP_QUAD_TOL: f64 = 1e-6;

/// Crossings of the biased equal-power contour with the ray through micro 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourPoints {
    /// Inner crossing, between the macro and the micro.
    pub p1: f64,
    /// Outer crossing, beyond the micro.
    pub p2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionAreas {
    pub s_dir: f64,
    pub s_cre: f64,
    pub s_macro: f64,
    pub s_tot: f64,
}

impl RegionAreas {
    pub fn of(&self, zeta: UserType) -> f64 {
        match zeta {
            UserType::Macro => self.s_macro,
            UserType::DirectMicro => self.s_dir,
            UserType::Cre => self.s_cre,
        }
    }
}

/// Angular position of micro `index` on a ring of `n` equally spaced micros.
pub fn micro_angle(index: usize, n: usize) -> f64 {
    TAU * index as f64 / n as f64
}

/// Natural log of (macro power / biased micro power) at distance `x` from the
/// macro along the ray through micro 0. Positive where the macro wins.
fn log_power_margin(x: f64, bias_db: f64, cfg: &ScenarioConfig) -> f64 {
    let macro_log = cfg.macro_power_w().ln() - cfg.alpha1 * x.ln();
    let micro_log = bias_db * LN_10 / 10.0 + cfg.micro_power_w().ln() - cfg.alpha2 * (x - cfg.ring_radius).abs().ln();
    macro_log - micro_log
}

fn bisect_root(lo: f64, hi: f64, bias_db: f64, cfg: &ScenarioConfig) -> Result<f64> {
    let (mut lo, mut hi) = (lo, hi);
    let f_lo = log_power_margin(lo, bias_db, cfg);
    let f_hi = log_power_margin(hi, bias_db, cfg);
    if !(f_lo.is_finite() && f_hi.is_finite()) || f_lo.signum() == f_hi.signum() {
        return Err(Error::NoRoot { bias_db });
    }
    let lo_positive = f_lo > 0.0;
    // Run to the floating-point limit; the 1e-6 m target is reached after ~30 steps.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = log_power_margin(mid, bias_db, cfg);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if (f_mid > 0.0) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Solves the equal-biased-power contour on the line through the macro and
/// micro 0 for its two crossings.
pub fn solve_cre_contour_points(bias_db: f64, cfg: &ScenarioConfig) -> Result<ContourPoints> {
    let ring = cfg.ring_radius;
    let eps = 1e-9 * ring;
    let p1 = bisect_root(eps, ring - eps, bias_db, cfg)?;
    let p2 = bisect_root(ring + eps, 5.0 * ring, bias_db, cfg)?;
    Ok(ContourPoints { p1, p2 })
}

/// Circle through the two contour crossings, rotated to micro `micro_index`.
pub fn approximate_coverage_circle(pts: ContourPoints, micro_index: usize, cfg: &ScenarioConfig) -> Circle {
    let angle = micro_angle(micro_index, cfg.n_micro);
    Circle::new(
        Point::from_polar(0.5 * (pts.p1 + pts.p2), angle),
        0.5 * (pts.p1 - pts.p2).abs(),
    )
}

/// Area of the region common to two overlapping CRE circles and the
/// deployment disc.
///
/// The configuration is rotated so the line through the two CRE centers is
/// vertical. Each vertical chord of the common region is then the
/// intersection of three chords, and its length is integrated in `x` between
/// the breakpoints where the bounding arc changes. For the ring layout the
/// region is mirror-symmetric about the horizontal axis, and the integral
/// splits into a CRE-arc piece from the inner lens vertex to the CRE/disc
/// crossing and a disc-arc piece from there to the disc edge, on each side.
pub fn three_circle_overlap_area(cre_a: &Circle, cre_b: &Circle, disc: &Circle) -> f64 {
    if two_circle_intersection_area(cre_a, cre_b) == 0.0 {
        return 0.0;
    }
    let axis = cre_b.center - cre_a.center;
    let len = axis.norm();
    let u = if len > 0.0 {
        axis * (1.0 / len)
    } else {
        Point::new(0.0, 1.0)
    };
    let mid = (cre_a.center + cre_b.center) * 0.5;
    let to_local = |c: &Circle| {
        let q = c.center - mid;
        Circle::new(Point::new(q.x * u.y - q.y * u.x, q.dot(u)), c.radius)
    };
    let circles = [to_local(cre_a), to_local(cre_b), to_local(disc)];

    let lo = circles.iter().map(|c| c.center.x - c.radius).fold(f64::MIN, f64::max);
    let hi = circles.iter().map(|c| c.center.x + c.radius).fold(f64::MAX, f64::min);
    if lo >= hi {
        return 0.0;
    }
    let mut cuts = vec![lo, hi];
    for i in 0..3 {
        for j in i + 1..3 {
            if let Some((p, q)) = circles[i].boundary_intersections(&circles[j]) {
                cuts.extend([p.x, q.x].into_iter().filter(|&x| x > lo && x < hi));
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let chord = |x: f64| {
        let mut top = f64::MAX;
        let mut bottom = f64::MIN;
        for c in &circles {
            let dx = x - c.center.x;
            let s = (c.radius * c.radius - dx * dx).max(0.0).sqrt();
            top = top.min(c.center.y + s);
            bottom = bottom.max(c.center.y - s);
        }
        (top - bottom).max(0.0)
    };
    let pieces = (cuts.len() - 1) as f64;
    cuts.windows(2)
        .map(|w| quadrature::integrate_endpoint_sqrt(chord, w[0], w[1], OVERLAP_QUAD_TOL / pieces))
        .sum()
}

/// The circular coverage model for one bias value: direct (unbiased) and CRE
/// (biased) coverage circles for every micro, the deployment disc, and the
/// resulting region areas.
#[derive(Debug, Clone)]
pub struct CoverageGeometry {
    pub bias: f64,
    pub disc: Circle,
    pub micros: Vec<Point>,
    pub direct: Vec<Circle>,
    pub cre: Vec<Circle>,
    /// CRE circle pairs whose disks overlap.
    pub overlap_pairs: Vec<(usize, usize)>,
    pub direct_contour: ContourPoints,
    pub cre_contour: ContourPoints,
    pub areas: RegionAreas,
}

impl CoverageGeometry {
    pub fn new(bias_db: f64, cfg: &ScenarioConfig) -> Result<Self> {
        let n = cfg.n_micro;
        let direct_contour = solve_cre_contour_points(0.0, cfg)?;
        let cre_contour = solve_cre_contour_points(bias_db, cfg)?;
        let disc = Circle::new(Point::ORIGIN, cfg.disc_radius);
        let micros: Vec<Point> = (0..n)
            .map(|i| Point::from_polar(cfg.ring_radius, micro_angle(i, n)))
            .collect();
        let direct: Vec<Circle> = (0..n)
            .map(|i| approximate_coverage_circle(direct_contour, i, cfg))
            .collect();
        let cre: Vec<Circle> = (0..n)
            .map(|i| approximate_coverage_circle(cre_contour, i, cfg))
            .collect();

        let mut overlap_pairs = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if two_circle_intersection_area(&cre[i], &cre[j]) > 0.0 {
                    overlap_pairs.push((i, j));
                }
            }
        }

        let s_tot = disc.area();
        let s_dir: f64 = direct.iter().map(|c| two_circle_intersection_area(c, &disc)).sum();
        let cre_sum: f64 = cre.iter().map(|c| two_circle_intersection_area(c, &disc)).sum();
        let overlap: f64 = overlap_pairs
            .iter()
            .map(|&(i, j)| three_circle_overlap_area(&cre[i], &cre[j], &disc))
            .sum();
        let s_cre = (cre_sum - overlap - s_dir).max(0.0);
        let s_macro = (s_tot - s_dir - s_cre).max(0.0);

        Ok(Self {
            bias: bias_db,
            disc,
            micros,
            direct,
            cre,
            overlap_pairs,
            direct_contour,
            cre_contour,
            areas: RegionAreas {
                s_dir,
                s_cre,
                s_macro,
                s_tot,
            },
        })
    }

    pub fn n_micro(&self) -> usize {
        self.micros.len()
    }

    /// Upper bound on the distance between a user of type `zeta` and its
    /// serving BS.
    pub fn max_distance(&self, zeta: UserType) -> f64 {
        match zeta {
            UserType::Macro => self.disc.radius,
            UserType::DirectMicro => self.micros[0].dist(self.direct[0].center) + self.direct[0].radius,
            UserType::Cre => self.micros[0].dist(self.cre[0].center) + self.cre[0].radius,
        }
    }

    /// Area of the `zeta` region within distance `d` of the serving BS,
    /// summed over all BSs serving that type. Saturates at
    /// `self.areas.of(zeta)`.
    ///
    /// Where two CRE circles overlap, users in the shared lens are served by
    /// the nearer micro, so the lens is split along the bisector of the two
    /// micros.
    pub fn region_cdf_area(&self, zeta: UserType, d: f64) -> f64 {
        let total = self.areas.of(zeta);
        if d <= 0.0 || total <= 0.0 {
            return 0.0;
        }
        if d >= self.max_distance(zeta) {
            return total;
        }
        let n = self.n_micro() as f64;
        let disc = self.disc;
        let area = match zeta {
            UserType::DirectMicro => {
                let reach = Circle::new(self.micros[0], d);
                n * disk_intersection_area(&[reach, self.direct[0], disc])
            }
            UserType::Cre => {
                let reach = Circle::new(self.micros[0], d);
                let outer = disk_intersection_area(&[reach, self.cre[0], disc]);
                let inner = disk_intersection_area(&[reach, self.direct[0], disc]);
                // The part of each shared lens on the neighbour's side of the
                // bisector belongs to the neighbour.
                let ceded: f64 = self
                    .overlap_pairs
                    .iter()
                    .filter_map(|&(i, j)| match (i, j) {
                        (0, k) | (k, 0) => Some(k),
                        _ => None,
                    })
                    .map(|k| {
                        let theirs = HalfPlane::closer_to(self.micros[k], self.micros[0]);
                        clipped_disk_intersection_area(&[reach, self.cre[0], self.cre[k], disc], &[theirs])
                    })
                    .sum();
                n * (outer - inner - ceded)
            }
            UserType::Macro => {
                let reach = Circle::new(Point::ORIGIN, d);
                let within = two_circle_intersection_area(&reach, &disc);
                // All CRE circles are rotations of circle 0 about the macro.
                let captured = n * disk_intersection_area(&[reach, self.cre[0], disc]);
                let doubly: f64 = self
                    .overlap_pairs
                    .iter()
                    .map(|&(i, j)| disk_intersection_area(&[reach, self.cre[i], self.cre[j], disc]))
                    .sum();
                within - captured + doubly
            }
        };
        area.clamp(0.0, total)
    }
}

/// Region areas of the circular coverage model at bias `bias_db`.
pub fn region_areas(bias_db: f64, cfg: &ScenarioConfig) -> Result<RegionAreas> {
    Ok(CoverageGeometry::new(bias_db, cfg)?.areas)
}

/// One-shot form of [`CoverageGeometry::region_cdf_area`].
pub fn region_cdf_area(zeta: UserType, bias_db: f64, d: f64, cfg: &ScenarioConfig) -> Result<f64> {
    Ok(CoverageGeometry::new(bias_db, cfg)?.region_cdf_area(zeta, d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn cfg() -> ScenarioConfig {
        ScenarioConfig::default()
    }

    fn relative_residual(x: f64, bias: f64, cfg: &ScenarioConfig) -> f64 {
        let macro_p = cfg.macro_power_w() / x.powf(cfg.alpha1);
        let micro_p = 10f64.powf(bias / 10.0) * cfg.micro_power_w() / (x - cfg.ring_radius).abs().powf(cfg.alpha2);
        (macro_p - micro_p).abs() / macro_p
    }

    #[test]
    fn contour_roots_satisfy_equal_power() {
        let c = cfg();
        let pts = solve_cre_contour_points(0.0, &c).unwrap();
        assert!(0.0 < pts.p1 && pts.p1 < 800.0 && 800.0 < pts.p2);
        assert!(relative_residual(pts.p1, 0.0, &c) < 1e-9);
        assert!(relative_residual(pts.p2, 0.0, &c) < 1e-9);
    }

    #[test]
    fn contour_at_constructed_midpoint() {
        let c = cfg();
        let x: f64 = 400.0;
        let ratio = (c.macro_power_w() / x.powf(c.alpha1)) / (c.micro_power_w() / (800.0 - x).powf(c.alpha2));
        let bias = 10.0 * ratio.log10();
        let pts = solve_cre_contour_points(bias, &c).unwrap();
        assert!((pts.p1 - x).abs() < 1e-6, "{}", pts.p1);
    }

    #[test]
    fn outer_crossing_grows_with_bias() {
        let c = cfg();
        let p10 = solve_cre_contour_points(10.0, &c).unwrap();
        let p20 = solve_cre_contour_points(20.0, &c).unwrap();
        assert!(p20.p2 > p10.p2);
        assert!(p20.p1 < p10.p1);
    }

    #[test]
    fn micro_stronger_everywhere_has_no_root() {
        let c = ScenarioConfig {
            micro_power: 60.0,
            ..cfg()
        };
        assert!(matches!(solve_cre_contour_points(0.0, &c), Err(Error::NoRoot { .. })));
    }

    #[test]
    fn coverage_circle_arithmetic() {
        let c = cfg();
        let circle = approximate_coverage_circle(ContourPoints { p1: 700.0, p2: 900.0 }, 0, &c);
        assert_eq!(circle.center, Point::new(800.0, 0.0));
        assert_eq!(circle.radius, 100.0);
        let rotated = approximate_coverage_circle(ContourPoints { p1: 700.0, p2: 900.0 }, 5, &c);
        assert!((rotated.center.x + 800.0).abs() < 1e-9 && rotated.center.y.abs() < 1e-9);
        assert_eq!(rotated.radius, 100.0);
    }

    #[test]
    fn zero_bias_has_no_cre_area() {
        let a = region_areas(0.0, &cfg()).unwrap();
        assert_eq!(a.s_cre, 0.0);
    }

    #[test]
    fn ten_db_cre_circles_are_disjoint() {
        let g = CoverageGeometry::new(10.0, &cfg()).unwrap();
        let sep = g.cre[0].center.dist(g.cre[1].center);
        assert!(sep > 2.0 * g.cre[0].radius);
        assert!(g.overlap_pairs.is_empty());
    }

    #[test]
    fn twenty_db_cre_circles_overlap_with_neighbours_only() {
        let g = CoverageGeometry::new(20.0, &cfg()).unwrap();
        assert_eq!(g.overlap_pairs.len(), 10);
        assert!(g.overlap_pairs.iter().all(|&(i, j)| j == i + 1 || (i == 0 && j == 9)));
    }

    #[test]
    fn partition_identity_over_bias_sweep() {
        for b in [0.0, 5.0, 10.0, 15.0, 20.0] {
            let a = region_areas(b, &cfg()).unwrap();
            let sum = a.s_dir + a.s_cre + a.s_macro;
            assert!((sum - a.s_tot).abs() <= 1e-6 * a.s_tot, "B={b}");
        }
    }

    #[test]
    fn three_circle_empty_when_cre_apart() {
        let a = Circle::new(Point::new(-2.0, 0.0), 1.0);
        let b = Circle::new(Point::new(2.0, 0.0), 1.0);
        let disc = Circle::new(Point::ORIGIN, 10.0);
        assert_eq!(three_circle_overlap_area(&a, &b, &disc), 0.0);
    }

    #[test]
    fn three_circle_matches_arc_route() {
        let a = Circle::new(Point::new(-0.5, 0.0), 1.0);
        let b = Circle::new(Point::new(0.5, 0.0), 1.0);
        let disc = Circle::new(Point::new(0.0, -9.5), 10.0);
        let quad = three_circle_overlap_area(&a, &b, &disc);
        let arcs = disk_intersection_area(&[a, b, disc]);
        assert!((quad - arcs).abs() < 1e-8, "{quad} vs {arcs}");
    }

    #[test]
    fn three_circle_mirror_symmetry() {
        let a = Circle::new(Point::new(-0.5, 0.2), 1.0);
        let b = Circle::new(Point::new(0.5, 0.2), 1.0);
        let disc = Circle::new(Point::new(0.3, -9.5), 10.0);
        let mirror = |c: Circle| Circle::new(Point::new(-c.center.x, c.center.y), c.radius);
        let lhs = three_circle_overlap_area(&a, &b, &disc);
        let rhs = three_circle_overlap_area(&mirror(b), &mirror(a), &mirror(disc));
        assert!((lhs - rhs).abs() < 1e-9);
    }

    #[test]
    fn cdf_area_endpoints() {
        let g = CoverageGeometry::new(20.0, &cfg()).unwrap();
        for zeta in UserType::ALL {
            assert_eq!(g.region_cdf_area(zeta, 0.0), 0.0);
            let far = g.max_distance(zeta);
            assert_eq!(g.region_cdf_area(zeta, far), g.areas.of(zeta));
            // Just inside the bound the value is already the full area.
            let near = g.region_cdf_area(zeta, far * (1.0 - 1e-9));
            assert!((near - g.areas.of(zeta)).abs() <= 1e-3 * g.areas.of(zeta), "{zeta:?}");
        }
    }

    #[test]
    fn direct_micro_small_radius_is_full_disk() {
        let g = CoverageGeometry::new(10.0, &cfg()).unwrap();
        let d = 0.5 * g.direct[0].radius - g.micros[0].dist(g.direct[0].center);
        let a = g.region_cdf_area(UserType::DirectMicro, d);
        assert!((a - 10.0 * PI * d * d).abs() < 1e-6 * a);
    }

    #[test]
    fn cdf_area_nondecreasing() {
        for b in [0.0, 10.0, 20.0] {
            let g = CoverageGeometry::new(b, &cfg()).unwrap();
            for zeta in UserType::ALL {
                let r = g.max_distance(zeta);
                let mut prev = 0.0;
                for k in 0..=400 {
                    let a = g.region_cdf_area(zeta, r * k as f64 / 400.0);
                    assert!(a >= prev - 1e-9 * g.areas.s_tot, "B={b} {zeta:?} k={k}");
                    assert!(a <= g.areas.of(zeta));
                    prev = a;
                }
            }
        }
    }
}
