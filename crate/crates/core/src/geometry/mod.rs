//! Planar geometry of the circular coverage model.

mod circle;
mod coverage;

pub use circle::{
    clipped_disk_intersection_area, disk_intersection_area, two_circle_intersection_area, Circle, HalfPlane, Point,
};
pub use coverage::{
    approximate_coverage_circle, micro_angle, region_areas, region_cdf_area, solve_cre_contour_points,
    three_circle_overlap_area, ContourPoints, CoverageGeometry, RegionAreas, OVERLAP_QUAD_TOL,
};
