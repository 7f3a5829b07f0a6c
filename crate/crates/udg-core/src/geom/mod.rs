//! Numeric kernel: weighted sites, the additively-weighted distance, and
//! predicates built on it.
//!
//! The weighted distance from site `s` (weight `w`) to a point `p` is
//! `||s - p|| + w`. Everything downstream (diagrams, merges, nearest-neighbor
//! queries) reduces to comparisons of these values, so this module also fixes
//! the tolerance model: double precision with relative tolerance [`EPS`] for
//! predicates and [`ROOT_EPS`] absolute for root refinement.

pub mod curve;
pub mod perturb;

pub use curve::{
    apollonius_vertices, bisector_hline_intersections, bisector_pair_intersections,
    bisector_segment_intersections, classify_bisector, Bisector, BisectorCurve, BisectorCursor,
    CurveKind,
};

use std::ops::{Add, Mul, Neg, Sub};

/// Relative tolerance for geometric predicates.
pub const EPS: f64 = 1e-9;

/// Absolute convergence target for iterative root refinement.
pub const ROOT_EPS: f64 = 1e-12;

/// Stable integer handle of a site. Unique within any site set.
pub type SiteId = usize;

/// A point in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the cross product (orientation of `o` relative to `self`).
    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Point) -> f64 {
        (self - o).norm()
    }

    /// Counterclockwise perpendicular.
    pub fn perp(self) -> Point {
        Point::new(-self.y, self.x)
    }

    pub fn normalized(self) -> Point {
        let n = self.norm();
        if n == 0.0 {
            Point::new(0.0, 0.0)
        } else {
            Point::new(self.x / n, self.y / n)
        }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
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

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

/// `f64` wrapper ordered by `total_cmp`, for heaps and sorts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrdF64(pub f64);

impl Eq for OrdF64 {}

impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// A planar point with an additive weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedSite {
    pub id: SiteId,
    pub pos: Point,
    pub w: f64,
}

impl WeightedSite {
    pub fn new(id: SiteId, x: f64, y: f64, w: f64) -> Self {
        WeightedSite { id, pos: Point::new(x, y), w }
    }

    /// Weighted distance `||pos - p|| + w`.
    pub fn dist(&self, p: Point) -> f64 {
        self.pos.dist(p) + self.w
    }

    pub fn is_finite(&self) -> bool {
        self.pos.is_finite() && self.w.is_finite()
    }
}

/// Weighted distance from a site to a point: `||s - p|| + w`.
pub fn weighted_distance(s: &WeightedSite, p: Point) -> f64 {
    s.dist(p)
}

/// Which of two sites a point is weighted-closer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    CloserA,
    Equidistant,
    CloserB,
}

/// Sign of `d(a, p) - d(b, p)` under the relative tolerance.
pub fn side_of_bisector(p: Point, a: &WeightedSite, b: &WeightedSite) -> Side {
    let da = a.dist(p);
    let db = b.dist(p);
    let tol = EPS * (1.0 + da.abs().max(db.abs()));
    if (da - db).abs() <= tol {
        Side::Equidistant
    } else if da < db {
        Side::CloserA
    } else {
        Side::CloserB
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weighted_distance_basics() {
        // 2 + 2
        let s = WeightedSite::new(0, 0.0, -1.0, 2.0);
        assert_eq!(weighted_distance(&s, Point::new(0.0, 1.0)), 4.0);
        // negative weight cancels the distance exactly
        let s = WeightedSite::new(1, 0.0, 4.0, -4.0);
        assert_eq!(weighted_distance(&s, Point::new(0.0, 0.0)), 0.0);
        let s = WeightedSite::new(2, 3.0, 0.0, 0.0);
        assert_eq!(weighted_distance(&s, Point::new(0.0, 0.0)), 3.0);
    }

    #[test]
    fn side_of_bisector_basics() {
        let a = WeightedSite::new(0, 0.0, 4.0, -4.0);
        let b = WeightedSite::new(1, 3.0, 0.0, 0.0);
        assert_eq!(side_of_bisector(Point::new(0.0, 0.0), &a, &b), Side::CloserA);
        // d(a) = 2, d(b) = sqrt(109)
        assert_eq!(side_of_bisector(Point::new(0.0, 10.0), &a, &b), Side::CloserA);
        assert!((b.dist(Point::new(0.0, 10.0)) - 109f64.sqrt()).abs() < 1e-12);

        // equal-weight sites: midline is equidistant
        let a = WeightedSite::new(0, -1.0, -1.0, 0.5);
        let b = WeightedSite::new(1, 1.0, -1.0, 0.5);
        assert_eq!(side_of_bisector(Point::new(0.0, 3.0), &a, &b), Side::Equidistant);
    }
}
