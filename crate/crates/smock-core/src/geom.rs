//! Planar geometry kernel: points, segments, boxes and the exact
//! distance primitives everything else is built on.
//!
//! All set distances between segment unions reduce to `point_segment` and
//! `segment_segment`, which are closed-form and exact up to f64 rounding.

use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Neg, Sub};

/// A point (or vector) in the Euclidean plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn dot(&self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z component of the cross product, i.e. the signed parallelogram area.
    pub fn cross(&self, other: Point2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(&self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn dist(&self, other: Point2) -> f64 {
        (*self - other).norm()
    }

    /// Lexicographic order on (x, y); used for deterministic tie-breaking.
    pub fn lex_cmp(&self, other: &Point2) -> std::cmp::Ordering {
        self.x
            .total_cmp(&other.x)
            .then_with(|| self.y.total_cmp(&other.y))
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, rhs: f64) -> Point2 {
        Point2::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

/// A closed straight segment. Degenerate (single point) segments are allowed
/// only through [`Segment::degenerate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: Point2,
    pub b: Point2,
}

impl Segment {
    /// A proper segment; `a == b` is rejected by pattern validation, use
    /// [`Segment::degenerate`] when a point set is really intended.
    pub fn new(a: Point2, b: Point2) -> Self {
        Segment { a, b }
    }

    pub fn degenerate(p: Point2) -> Self {
        Segment { a: p, b: p }
    }

    pub fn is_degenerate(&self) -> bool {
        self.a == self.b
    }

    pub fn length(&self) -> f64 {
        self.a.dist(self.b)
    }

    pub fn translate(&self, v: Point2) -> Segment {
        Segment::new(self.a + v, self.b + v)
    }

    /// Closest point of the segment to `p`.
    pub fn closest_point_to(&self, p: Point2) -> Point2 {
        let d = self.b - self.a;
        let len_sq = d.norm_sq();
        if len_sq == 0.0 {
            return self.a;
        }
        let t = ((p - self.a).dot(d) / len_sq).clamp(0.0, 1.0);
        self.a + d * t
    }

    pub fn midpoint(&self) -> Point2 {
        Point2::new(0.5 * (self.a.x + self.b.x), 0.5 * (self.a.y + self.b.y))
    }
}

/// Exact Euclidean distance from a point to a closed segment.
pub fn point_segment_distance(p: Point2, s: &Segment) -> f64 {
    p.dist(s.closest_point_to(p))
}

fn segments_properly_intersect(s: &Segment, t: &Segment) -> bool {
    let d1 = (t.b - t.a).cross(s.a - t.a);
    let d2 = (t.b - t.a).cross(s.b - t.a);
    let d3 = (s.b - s.a).cross(t.a - s.a);
    let d4 = (s.b - s.a).cross(t.b - s.a);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

/// Exact Euclidean distance between two closed segments.
///
/// Zero iff the segments intersect; otherwise the minimum is attained at an
/// endpoint of one of them, so four point-segment distances suffice.
pub fn segment_segment_distance(s: &Segment, t: &Segment) -> f64 {
    if segments_properly_intersect(s, t) {
        return 0.0;
    }
    let d1 = point_segment_distance(s.a, t);
    let d2 = point_segment_distance(s.b, t);
    let d3 = point_segment_distance(t.a, s);
    let d4 = point_segment_distance(t.b, s);
    d1.min(d2).min(d3).min(d4)
}

/// Closest pair of points `(on_s, on_t)` realizing `segment_segment_distance`.
///
/// When the minimizing pair is not unique (parallel or touching segments) the
/// lexicographically smallest pair among the endpoint candidates is returned,
/// so witnesses are deterministic.
pub fn segment_segment_closest_pair(s: &Segment, t: &Segment) -> (Point2, Point2, f64) {
    if segments_properly_intersect(s, t) {
        // Proper crossing: intersection point via line-line solve.
        let r = s.b - s.a;
        let q = t.b - t.a;
        let denom = r.cross(q);
        let u = (t.a - s.a).cross(q) / denom;
        let p = s.a + r * u.clamp(0.0, 1.0);
        return (p, p, 0.0);
    }
    let mut best: Option<(Point2, Point2, f64)> = None;
    let mut consider = |on_s: Point2, on_t: Point2| {
        let d = on_s.dist(on_t);
        let replace = match &best {
            None => true,
            Some((bs, bt, bd)) => {
                d < *bd
                    || (d == *bd
                        && on_s
                            .lex_cmp(bs)
                            .then_with(|| on_t.lex_cmp(bt))
                            .is_lt())
            }
        };
        if replace {
            best = Some((on_s, on_t, d));
        }
    };
    consider(s.a, t.closest_point_to(s.a));
    consider(s.b, t.closest_point_to(s.b));
    consider(s.closest_point_to(t.a), t.a);
    consider(s.closest_point_to(t.b), t.b);
    let (a, b, d) = best.unwrap();
    (a, b, d)
}

/// Axis-aligned bounding box with `min <= max` componentwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min: Point2,
    pub max: Point2,
}

impl BoundingBox {
    pub fn new(min: Point2, max: Point2) -> Self {
        BoundingBox { min, max }
    }

    pub fn from_corners(a: Point2, b: Point2) -> Self {
        BoundingBox {
            min: Point2::new(a.x.min(b.x), a.y.min(b.y)),
            max: Point2::new(a.x.max(b.x), a.y.max(b.y)),
        }
    }

    pub fn is_valid(&self) -> bool {
        self.min.x <= self.max.x && self.min.y <= self.max.y
    }

    pub fn inflate(&self, r: f64) -> BoundingBox {
        BoundingBox {
            min: Point2::new(self.min.x - r, self.min.y - r),
            max: Point2::new(self.max.x + r, self.max.y + r),
        }
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn center(&self) -> Point2 {
        Point2::new(
            0.5 * (self.min.x + self.max.x),
            0.5 * (self.min.y + self.max.y),
        )
    }

    /// Whether the closed box meets the closed segment.
    pub fn intersects_segment(&self, s: &Segment) -> bool {
        if self.contains(s.a) || self.contains(s.b) {
            return true;
        }
        // Liang-Barsky style clip of the parametric segment against the slab.
        let d = s.b - s.a;
        let mut t0 = 0.0f64;
        let mut t1 = 1.0f64;
        for (p, q0, q1, o) in [
            (d.x, self.min.x, self.max.x, s.a.x),
            (d.y, self.min.y, self.max.y, s.a.y),
        ] {
            if p == 0.0 {
                if o < q0 || o > q1 {
                    return false;
                }
            } else {
                let (mut ta, mut tb) = ((q0 - o) / p, (q1 - o) / p);
                if ta > tb {
                    std::mem::swap(&mut ta, &mut tb);
                }
                t0 = t0.max(ta);
                t1 = t1.min(tb);
                if t0 > t1 {
                    return false;
                }
            }
        }
        true
    }
}
