//! Domain types shared by the whole pipeline.
//!
//! Every ply lives in its own flattened 2D frame. The fiber direction `d` and
//! the fiber-transverse direction `d_perp` are derived from the fiber angle,
//! and seams are addressed by their offset along `d_perp` measured from the
//! ply origin (the vertex with the smallest transverse projection), so every
//! offset inside the ply is nonnegative.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{PlyError, Result};
use crate::geometry;

/// A point in the normalized flat-pattern plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Point2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl std::ops::Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl std::ops::Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }
}

impl From<(f64, f64)> for Point2 {
    fn from((x, y): (f64, f64)) -> Self {
        Point2::new(x, y)
    }
}

/// A flattened ply: a simple CCW polygon with a fiber orientation.
#[derive(Debug, Clone, PartialEq)]
pub struct Ply {
    pub id: String,
    pub stack_index: u32,
    polygon: Vec<Point2>,
    fiber_angle: f64,
}

impl Ply {
    /// Validates the outline and normalizes it to counter-clockwise order.
    ///
    /// The fiber angle is in radians and must lie in `[0, pi)`.
    pub fn new(
        id: impl Into<String>,
        stack_index: u32,
        polygon: Vec<Point2>,
        fiber_angle: f64,
    ) -> Result<Self> {
        if !(0.0..PI).contains(&fiber_angle) || !fiber_angle.is_finite() {
            return Err(PlyError::BadAngle(fiber_angle));
        }
        let polygon = geometry::normalize_simple_polygon(polygon)?;
        Ok(Self {
            id: id.into(),
            stack_index,
            polygon,
            fiber_angle,
        })
    }

    pub fn polygon(&self) -> &[Point2] {
        &self.polygon
    }

    pub fn fiber_angle(&self) -> f64 {
        self.fiber_angle
    }

    /// Unit fiber direction `(cos t, sin t)`.
    pub fn direction(&self) -> Point2 {
        Point2::new(self.fiber_angle.cos(), self.fiber_angle.sin())
    }

    /// Unit fiber-transverse direction `(-sin t, cos t)`.
    pub fn transverse(&self) -> Point2 {
        Point2::new(-self.fiber_angle.sin(), self.fiber_angle.cos())
    }

    /// Vertex with the minimal transverse projection; ties go to the smaller
    /// projection onto the fiber direction.
    pub fn origin(&self) -> Point2 {
        let (d, n) = (self.direction(), self.transverse());
        *self
            .polygon
            .iter()
            .min_by(|p, q| {
                n.dot(**p)
                    .total_cmp(&n.dot(**q))
                    .then(d.dot(**p).total_cmp(&d.dot(**q)))
            })
            .expect("validated polygon is nonempty")
    }

    /// Transverse coordinate of the origin, `d_perp . O`.
    pub fn origin_projection(&self) -> f64 {
        self.transverse().dot(self.origin())
    }

    /// Seam offset of an arbitrary point in this ply's frame.
    pub fn offset_of(&self, p: Point2) -> f64 {
        self.transverse().dot(p) - self.origin_projection()
    }

    /// Extent of the outline along the fiber-transverse axis.
    pub fn width(&self) -> f64 {
        let iv = geometry::project_polygon(&self.polygon, self.transverse())
            .expect("validated polygon is nonempty");
        iv.hi - iv.lo
    }

    /// Extent of the outline along the fiber direction.
    pub fn length(&self) -> f64 {
        let iv = geometry::project_polygon(&self.polygon, self.direction())
            .expect("validated polygon is nonempty");
        iv.hi - iv.lo
    }

    pub fn area(&self) -> f64 {
        geometry::polygon_area(&self.polygon)
    }
}

/// Extent of a ply's projection onto its fiber-transverse axis.
pub fn ply_width(ply: &Ply) -> f64 {
    ply.width()
}

/// A seam addressed by ply and offset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Seam {
    pub ply_id: String,
    pub offset: f64,
}

/// Normalized standard-form line `a x + b y + c = 0` with `a^2 + b^2 = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineStd {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl LineStd {
    /// Line through `p` with unit normal `normal`.
    pub fn through(p: Point2, normal: Point2) -> Self {
        let len = normal.norm();
        let (a, b) = (normal.x / len, normal.y / len);
        Self {
            a,
            b,
            c: -(a * p.x + b * p.y),
        }
    }

    pub fn normal(&self) -> Point2 {
        Point2::new(self.a, self.b)
    }

    /// Signed distance of `p` from the line.
    pub fn signed_distance(&self, p: Point2) -> f64 {
        self.a * p.x + self.b * p.y + self.c
    }
}

/// The fiber-aligned seam line of `ply` at `offset`. The normal is `d_perp`,
/// so `c = -(d_perp . O) - offset`.
pub fn seam_to_line(ply: &Ply, offset: f64) -> LineStd {
    let n = ply.transverse();
    LineStd::through(ply.origin() + n * offset, n)
}

/// A polygonal region where seams and their overlap bands are prohibited.
#[derive(Debug, Clone, PartialEq)]
pub struct StayOutZone {
    polygon: Vec<Point2>,
}

impl StayOutZone {
    pub fn new(polygon: Vec<Point2>) -> Result<Self> {
        Ok(Self {
            polygon: geometry::normalize_simple_polygon(polygon)?,
        })
    }

    /// Axis-aligned square centred on `center`.
    pub fn square(center: Point2, side: f64) -> Result<Self> {
        let h = side / 2.0;
        Self::new(vec![
            Point2::new(center.x - h, center.y - h),
            Point2::new(center.x + h, center.y - h),
            Point2::new(center.x + h, center.y + h),
            Point2::new(center.x - h, center.y + h),
        ])
    }

    pub fn polygon(&self) -> &[Point2] {
        &self.polygon
    }
}

/// Thickness tolerance, either as a ratio `N / M` or as explicit counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tolerance {
    Ratio(f64),
    Explicit { plies: usize, max_overlaps: usize },
}

impl Tolerance {
    /// Maximum number of intersecting overlaps `N` for a layup of `plies`.
    pub fn max_overlaps(&self, plies: usize) -> usize {
        match *self {
            // Small slack so that e.g. 0.25 * 24 does not round down to 5.
            Tolerance::Ratio(r) => ((r * plies as f64) + 1e-9).floor() as usize,
            Tolerance::Explicit { max_overlaps, .. } => max_overlaps,
        }
    }
}

/// Manufacturing limits for one partitioning run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ManufacturingConfig {
    pub spool_width: f64,
    pub overlap_width: f64,
    pub min_subply_width: f64,
    #[serde(default)]
    pub flimsy_min: f64,
    #[serde(default)]
    pub small_min: f64,
    pub tolerance: Tolerance,
    #[serde(default = "default_base_overlaps")]
    pub base_overlaps: usize,
}

fn default_base_overlaps() -> usize {
    2
}

impl ManufacturingConfig {
    /// Config with no ply-quality minima and a 100% thickness tolerance.
    pub fn new(spool_width: f64, overlap_width: f64, min_subply_width: f64) -> Self {
        Self {
            spool_width,
            overlap_width,
            min_subply_width,
            flimsy_min: 0.0,
            small_min: 0.0,
            tolerance: Tolerance::Ratio(1.0),
            base_overlaps: 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let c = |msg: &str| Err(PlyError::Config(msg.to_string()));
        let all = [
            self.spool_width,
            self.overlap_width,
            self.min_subply_width,
            self.flimsy_min,
            self.small_min,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return c("non-finite value");
        }
        if self.spool_width <= 0.0 {
            return c("spool_width must be positive");
        }
        if self.overlap_width < 0.0 || self.min_subply_width < 0.0 {
            return c("overlap_width and min_subply_width must be nonnegative");
        }
        if self.flimsy_min < 0.0 || self.small_min < 0.0 {
            return c("ply-quality minima must be nonnegative");
        }
        if self.overlap_width >= self.spool_width {
            return c("overlap_width must be smaller than spool_width");
        }
        if self.min_subply_width > self.spool_width - self.overlap_width + 1e-12 {
            return c("min_subply_width exceeds spool_width - overlap_width");
        }
        if self.base_overlaps < 1 {
            return c("base_overlaps must be at least 1");
        }
        match self.tolerance {
            Tolerance::Ratio(r) if !(r > 0.0 && r <= 1.0) => c("tolerance ratio must be in (0, 1]"),
            Tolerance::Explicit { plies, max_overlaps } if plies == 0 || max_overlaps == 0 => {
                c("explicit tolerance needs positive counts")
            }
            _ => Ok(()),
        }
    }

    /// Largest admissible gap between adjacent seams, `w_s - w_l`.
    pub fn max_gap(&self) -> f64 {
        self.spool_width - self.overlap_width
    }

    pub fn half_overlap(&self) -> f64 {
        self.overlap_width / 2.0
    }

    /// True once the strip between the last seam and the far boundary fits
    /// on one spool: `width - x_last + w_l / 2 <= w_s`.
    pub fn is_covered(&self, ply_width: f64, last_offset: f64) -> bool {
        ply_width - last_offset + self.half_overlap() <= self.spool_width + 1e-12
    }
}

/// Linear cost model parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    /// Material cost per unit area per unit spool width.
    pub a_mat: f64,
    /// Material cost per unit area at zero width.
    pub b_mat: f64,
    pub c_seam: f64,
    /// Mean sub-ply length; `None` uses the mean fiber-direction ply extent.
    #[serde(default)]
    pub mean_subply_length: Option<f64>,
    pub spool_min: f64,
    pub spool_max: f64,
}

impl Default for CostParams {
    fn default() -> Self {
        Self {
            a_mat: 5.0,
            b_mat: 1.0,
            c_seam: 0.01,
            mean_subply_length: None,
            spool_min: 0.1,
            spool_max: 0.5,
        }
    }
}

impl CostParams {
    pub fn validate(&self) -> Result<()> {
        if self.a_mat < 0.0 || self.b_mat < 0.0 || self.c_seam < 0.0 {
            return Err(PlyError::Config("costs must be nonnegative".into()));
        }
        if !(self.spool_min <= self.spool_max) || self.spool_min <= 0.0 {
            return Err(PlyError::Config("need 0 < spool_min <= spool_max".into()));
        }
        if matches!(self.mean_subply_length, Some(h) if !(h > 0.0)) {
            return Err(PlyError::Config("mean_subply_length must be positive".into()));
        }
        Ok(())
    }
}

/// Seam offsets for every ply plus the coverage objective.
///
/// Offsets per ply are strictly increasing and start at the boundary seam
/// `0.0`. The objective is `-(sum of last offsets)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Design {
    seams: BTreeMap<String, Vec<f64>>,
    objective: f64,
}

impl Default for Design {
    fn default() -> Self {
        Self::new(BTreeMap::new())
    }
}

impl Design {
    pub fn new(seams: BTreeMap<String, Vec<f64>>) -> Self {
        let objective = Self::objective_of(&seams);
        Self { seams, objective }
    }

    fn objective_of(seams: &BTreeMap<String, Vec<f64>>) -> f64 {
        -seams
            .values()
            .map(|o| o.last().copied().unwrap_or(0.0))
            .sum::<f64>()
    }

    pub fn seams(&self) -> &BTreeMap<String, Vec<f64>> {
        &self.seams
    }

    pub fn offsets(&self, ply_id: &str) -> Option<&[f64]> {
        self.seams.get(ply_id).map(Vec::as_slice)
    }

    pub fn objective(&self) -> f64 {
        self.objective
    }

    pub fn set_offsets(&mut self, ply_id: impl Into<String>, offsets: Vec<f64>) {
        self.seams.insert(ply_id.into(), offsets);
        self.objective = Self::objective_of(&self.seams);
    }

    /// Merges another design's plies into this one.
    pub fn extend(&mut self, other: Design) {
        self.seams.extend(other.seams);
        self.objective = Self::objective_of(&self.seams);
    }

    /// Total number of seams, boundary seams included.
    pub fn seam_count(&self) -> usize {
        self.seams.values().map(Vec::len).sum()
    }

    /// Seams that actually cut a ply (everything but the boundary seam).
    pub fn interior_seam_count(&self) -> usize {
        self.seams.values().map(|o| o.len().saturating_sub(1)).sum()
    }

    pub fn as_seams(&self) -> Vec<Seam> {
        self.seams
            .iter()
            .flat_map(|(id, offs)| {
                offs.iter().map(move |&offset| Seam {
                    ply_id: id.clone(),
                    offset,
                })
            })
            .collect()
    }
}
