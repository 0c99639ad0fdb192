//! Planar geometry: projections, lines, strips, clipping and vertex
//! classification.

use geo::BooleanOps;
use serde::{Deserialize, Serialize};

use crate::error::{PlyError, Result};
use crate::model::{LineStd, Ply, Point2};

/// Determinant threshold below which two lines are treated as parallel.
pub const PARALLEL_EPS: f64 = 1e-10;

/// Projections shorter than this count as zero in vertex classification.
pub const ZERO_PROJECTION_EPS: f64 = 1e-9;

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "interval [{lo}, {hi}] is inverted");
        Self { lo, hi }
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn shift(&self, t: f64) -> Self {
        Self::new(self.lo + t, self.hi + t)
    }

    pub fn dilate(&self, r: f64) -> Self {
        Self::new(self.lo - r, self.hi + r)
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let (lo, hi) = (self.lo.max(other.lo), self.hi.min(other.hi));
        (lo <= hi).then(|| Interval::new(lo, hi))
    }

    /// Removes the open interval `(cut.lo, cut.hi)` from every member of
    /// `set`; endpoints of the cut remain admissible.
    pub fn subtract_open(set: &[Interval], cut: &Interval) -> Vec<Interval> {
        let mut out = Vec::with_capacity(set.len() + 1);
        for iv in set {
            if cut.hi <= iv.lo || cut.lo >= iv.hi || cut.lo >= cut.hi {
                out.push(*iv);
                continue;
            }
            if iv.lo <= cut.lo {
                out.push(Interval::new(iv.lo, cut.lo));
            }
            if cut.hi <= iv.hi {
                out.push(Interval::new(cut.hi, iv.hi));
            }
        }
        out
    }

    /// Sorts and merges overlapping or touching intervals.
    pub fn merge(mut set: Vec<Interval>) -> Vec<Interval> {
        set.sort_by(|a, b| a.lo.total_cmp(&b.lo).then(a.hi.total_cmp(&b.hi)));
        let mut out: Vec<Interval> = Vec::with_capacity(set.len());
        for iv in set {
            match out.last_mut() {
                Some(last) if iv.lo <= last.hi => last.hi = last.hi.max(iv.hi),
                _ => out.push(iv),
            }
        }
        out
    }
}

/// Band of half-width `half_width` around a line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Strip {
    pub center_line: LineStd,
    pub half_width: f64,
}

impl Strip {
    pub fn new(center_line: LineStd, half_width: f64) -> Self {
        Self {
            center_line,
            half_width,
        }
    }

    pub fn contains(&self, p: Point2) -> bool {
        self.center_line.signed_distance(p).abs() <= self.half_width
    }

    /// Clips a polygon to this slab (two half-plane passes).
    pub fn clip(&self, polygon: &[Point2]) -> Vec<Point2> {
        let l = self.center_line;
        let h = self.half_width;
        // a x + b y + c <= h  and  -(a x + b y + c) <= h
        let upper = clip_halfplane(polygon, l.a, l.b, l.c - h);
        clip_halfplane(&upper, -l.a, -l.b, -l.c - h)
    }
}

/// `[min, max]` of the vertex projections onto `axis`.
pub fn project_polygon(polygon: &[Point2], axis: Point2) -> Result<Interval> {
    if polygon.is_empty() {
        return Err(PlyError::TooFewVertices(0));
    }
    let (lo, hi) = polygon
        .iter()
        .map(|p| p.dot(axis))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
    Ok(Interval::new(lo, hi))
}

/// Intersection of two standard-form lines, or `None` when parallel.
pub fn line_intersection(i: &LineStd, j: &LineStd) -> Option<Point2> {
    let det = i.a * j.b - j.a * i.b;
    if det.abs() < PARALLEL_EPS {
        return None;
    }
    let x = (i.b * j.c - j.b * i.c) / det;
    let y = (j.a * i.c - i.a * j.c) / det;
    Some(Point2::new(x, y))
}

pub fn signed_area(polygon: &[Point2]) -> f64 {
    let n = polygon.len();
    if n < 3 {
        return 0.0;
    }
    0.5 * (0..n)
        .map(|i| polygon[i].cross(polygon[(i + 1) % n]))
        .sum::<f64>()
}

pub fn polygon_area(polygon: &[Point2]) -> f64 {
    signed_area(polygon).abs()
}

pub fn centroid(polygon: &[Point2]) -> Point2 {
    let n = polygon.len();
    let a = signed_area(polygon);
    if a.abs() < 1e-300 {
        let s = polygon.iter().fold(Point2::new(0.0, 0.0), |acc, p| acc + *p);
        return s * (1.0 / n.max(1) as f64);
    }
    let (mut cx, mut cy) = (0.0, 0.0);
    for i in 0..n {
        let (p, q) = (polygon[i], polygon[(i + 1) % n]);
        let w = p.cross(q);
        cx += (p.x + q.x) * w;
        cy += (p.y + q.y) * w;
    }
    Point2::new(cx / (6.0 * a), cy / (6.0 * a))
}

/// Crossing-number point-in-polygon test. Points on the boundary may land
/// on either side.
pub fn point_in_polygon(p: Point2, polygon: &[Point2]) -> bool {
    let n = polygon.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (polygon[i], polygon[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Sutherland-Hodgman pass keeping `a x + b y + c <= 0`.
///
/// Exact in area for non-convex subjects (bridging edges are degenerate).
pub fn clip_halfplane(polygon: &[Point2], a: f64, b: f64, c: f64) -> Vec<Point2> {
    let n = polygon.len();
    let mut out = Vec::with_capacity(n + 2);
    if n == 0 {
        return out;
    }
    let side = |p: Point2| a * p.x + b * p.y + c;
    for i in 0..n {
        let (p, q) = (polygon[i], polygon[(i + 1) % n]);
        let (sp, sq) = (side(p), side(q));
        if sp <= 0.0 {
            out.push(p);
        }
        if (sp < 0.0 && sq > 0.0) || (sp > 0.0 && sq < 0.0) {
            let t = sp / (sp - sq);
            out.push(p + (q - p) * t);
        }
    }
    if out.len() < 3 {
        out.clear();
    }
    out
}

pub fn to_geo(polygon: &[Point2]) -> geo::Polygon<f64> {
    let ring: Vec<geo::Coord<f64>> = polygon
        .iter()
        .map(|p| geo::Coord { x: p.x, y: p.y })
        .collect();
    geo::Polygon::new(geo::LineString::from(ring), vec![])
}

pub fn from_geo(polygon: &geo::Polygon<f64>) -> Vec<Point2> {
    let mut pts: Vec<Point2> = polygon
        .exterior()
        .coords()
        .map(|c| Point2::new(c.x, c.y))
        .collect();
    if pts.len() > 1 && pts.first() == pts.last() {
        pts.pop();
    }
    if signed_area(&pts) < 0.0 {
        pts.reverse();
    }
    pts
}

/// Whether a CCW polygon has no reflex vertex.
pub fn is_convex(polygon: &[Point2]) -> bool {
    let n = polygon.len();
    (0..n).all(|i| orient(polygon[i], polygon[(i + 1) % n], polygon[(i + 2) % n]) >= 0.0)
}

/// Boolean intersection of two simple polygons; one polygon per connected
/// component, empty when disjoint.
pub fn clip_polygon(subject: &[Point2], clip: &[Point2]) -> Vec<Vec<Point2>> {
    if subject.len() < 3 || clip.len() < 3 {
        return Vec::new();
    }
    let result = to_geo(subject).intersection(&to_geo(clip));
    result
        .0
        .iter()
        .map(from_geo)
        .filter(|p| p.len() >= 3 && polygon_area(p) > 0.0)
        .collect()
}

/// Area of `s1 ∩ s2 ∩ s3 ∩ domain`, by successive slab clipping.
pub fn triple_overlap_area(s1: &Strip, s2: &Strip, s3: &Strip, domain: &[Point2]) -> f64 {
    let mut region = domain.to_vec();
    for s in [s1, s2, s3] {
        region = s.clip(&region);
        if region.is_empty() {
            return 0.0;
        }
    }
    polygon_area(&region)
}

/// Whether the seam at `offset` cuts through the interior of the ply.
pub fn seam_polygon_intersects(ply: &Ply, offset: f64) -> bool {
    offset > 0.0 && offset < ply.width()
}

/// Length of the part of `line` lying inside `polygon`.
pub fn chord_length(line: &LineStd, polygon: &[Point2]) -> f64 {
    chord_segments(line, polygon)
        .iter()
        .map(|[p, q]| (*q - *p).norm())
        .sum()
}

/// Pieces of `line` inside `polygon`, ordered along the line.
pub fn chord_segments(line: &LineStd, polygon: &[Point2]) -> Vec<[Point2; 2]> {
    let dir = Point2::new(-line.b, line.a);
    let foot = line.normal() * (-line.c);
    let n = polygon.len();
    let mut ts = Vec::new();
    for i in 0..n {
        let (p, q) = (polygon[i], polygon[(i + 1) % n]);
        let (sp, sq) = (line.signed_distance(p), line.signed_distance(q));
        if (sp >= 0.0) != (sq >= 0.0) {
            let t = sp / (sp - sq);
            ts.push(dir.dot(p + (q - p) * t));
        }
    }
    ts.sort_by(f64::total_cmp);
    ts.chunks_exact(2)
        .map(|w| [foot + dir * w[0], foot + dir * w[1]])
        .collect()
}

/// Cone-tip vertices relevant to sub-ply quality.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VertexClasses {
    /// Convex tips: small corner sub-plies form here.
    pub small: Vec<Point2>,
    /// Reflex tips: flimsy sub-plies form here.
    pub flimsy: Vec<Point2>,
}

/// Classifies cone-tip vertices against fiber-aligned seams.
///
/// Both edges are taken as vectors leaving the vertex. A vertex qualifies
/// when both project onto `d_perp` with the same nonzero sign; convex ones
/// go to `small`, reflex ones to `flimsy`.
pub fn classify_vertices(ply: &Ply) -> VertexClasses {
    let poly = ply.polygon();
    let n = poly.len();
    let axis = ply.transverse();
    let mut out = VertexClasses::default();
    for i in 0..n {
        let (prev, v, next) = (poly[(i + n - 1) % n], poly[i], poly[(i + 1) % n]);
        let (back, fwd) = (prev - v, next - v);
        let (pb, pf) = (axis.dot(back), axis.dot(fwd));
        if pb.abs() < ZERO_PROJECTION_EPS || pf.abs() < ZERO_PROJECTION_EPS {
            continue;
        }
        if pb.signum() != pf.signum() {
            continue;
        }
        // CCW outline: left turn means interior angle below pi.
        if (v - prev).cross(next - v) >= 0.0 {
            out.small.push(v);
        } else {
            out.flimsy.push(v);
        }
    }
    out
}

fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    (b - a).cross(c - a)
}

fn on_segment(a: Point2, b: Point2, p: Point2) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Closed-segment intersection test (touching counts).
pub fn segments_intersect(p1: Point2, p2: Point2, q1: Point2, q2: Point2) -> bool {
    let (d1, d2) = (orient(q1, q2, p1), orient(q1, q2, p2));
    let (d3, d4) = (orient(p1, p2, q1), orient(p1, p2, q2));
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

/// Validates a polygon and returns it in CCW order without repeated
/// consecutive vertices.
pub fn normalize_simple_polygon(polygon: Vec<Point2>) -> Result<Vec<Point2>> {
    if polygon.iter().any(|p| !p.is_finite()) {
        return Err(PlyError::NonFinite);
    }
    let mut pts: Vec<Point2> = Vec::with_capacity(polygon.len());
    for p in polygon {
        if pts.last() != Some(&p) {
            pts.push(p);
        }
    }
    while pts.len() > 1 && pts.first() == pts.last() {
        pts.pop();
    }
    if pts.len() < 3 {
        return Err(PlyError::TooFewVertices(pts.len()));
    }
    let n = pts.len();
    let edge = |i: usize| (pts[i], pts[(i + 1) % n]);
    for i in 0..n {
        for j in (i + 2)..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let ((a1, a2), (b1, b2)) = (edge(i), edge(j));
            if segments_intersect(a1, a2, b1, b2) {
                return Err(PlyError::SelfIntersecting(i, j));
            }
        }
    }
    let area = signed_area(&pts);
    let scale = pts.iter().map(|p| p.x.abs().max(p.y.abs())).fold(1.0, f64::max);
    if area.abs() <= 1e-12 * scale * scale {
        return Err(PlyError::Degenerate(area));
    }
    // Adjacent edges may only share their common vertex.
    for i in 0..n {
        let (u, shared, w) = (pts[i], pts[(i + 1) % n], pts[(i + 2) % n]);
        if orient(u, shared, w) == 0.0 && (u - shared).dot(w - shared) > 0.0 {
            return Err(PlyError::SelfIntersecting(i, (i + 1) % n));
        }
    }
    if area < 0.0 {
        pts.reverse();
    }
    Ok(pts)
}
