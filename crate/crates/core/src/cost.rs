//! Production cost, sub-ply extraction, nesting and spool-width sweeps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PlyError, Result};
use crate::geometry::{self, polygon_area};
use crate::model::{seam_to_line, CostParams, Design, ManufacturingConfig, Ply, Point2, StayOutZone};
use crate::search::{self, Strategy};

/// One cut piece of a ply, in the ply's own coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubPlyPiece {
    pub ply_id: String,
    /// Position of the sub-ply along the ply's transverse axis.
    pub index: usize,
    pub polygon: Vec<Point2>,
    /// Direction of the fibers, used to lay the piece along the spool.
    pub fiber_angle: f64,
    /// Extent across the fibers, overlaps included.
    pub width: f64,
    /// Extent along the fibers.
    pub length: f64,
}

impl SubPlyPiece {
    pub fn area(&self) -> f64 {
        polygon_area(&self.polygon)
    }

    pub fn label(&self) -> String {
        format!("{}#{}", self.ply_id, self.index)
    }
}

/// Cuts every ply of `plies` along its seams. Pieces reach half an overlap
/// width past each interior seam; the ply boundary is not extended. A
/// sub-ply that falls apart into several regions yields several pieces.
pub fn extract_subplies(
    design: &Design,
    plies: &[Ply],
    config: &ManufacturingConfig,
) -> Result<Vec<SubPlyPiece>> {
    let h = config.half_overlap();
    let mut out = Vec::new();
    for ply in plies {
        let offsets = design
            .offsets(&ply.id)
            .ok_or_else(|| PlyError::UnknownPly(ply.id.clone()))?;
        let cuts: Vec<f64> = offsets
            .iter()
            .copied()
            .filter(|&x| geometry::seam_polygon_intersects(ply, x))
            .collect();
        let d = ply.direction();
        let n = ply.transverse();
        let base = ply.origin_projection();
        let mut index = 0;
        for k in 0..=cuts.len() {
            let mut region = ply.polygon().to_vec();
            // Cut lines bounding this piece, as `n . p = value`.
            let mut lines = Vec::new();
            if k > 0 {
                lines.push(base + cuts[k - 1] - h);
            }
            if k < cuts.len() {
                lines.push(base + cuts[k] + h);
            }
            if k > 0 {
                // Keep offsets >= cut - h, i.e. -(n.p) + base + cut - h <= 0.
                region = geometry::clip_halfplane(&region, -n.x, -n.y, base + cuts[k - 1] - h);
            }
            if k < cuts.len() {
                region = geometry::clip_halfplane(&region, n.x, n.y, -(base + cuts[k] + h));
            }
            if region.len() < 3 || polygon_area(&region) <= 0.0 {
                continue;
            }
            // Halfplane clipping of a non-convex outline can bridge separate
            // regions with zero-width edges; split them properly.
            let parts = if geometry::is_convex(ply.polygon()) {
                vec![region]
            } else {
                geometry::clip_polygon(ply.polygon(), &region)
                    .into_iter()
                    .map(|part| snap(part, ply.polygon(), n, &lines))
                    .collect()
            };
            for part in parts {
                let (across, along) = extents(&part, n, d);
                out.push(SubPlyPiece {
                    ply_id: ply.id.clone(),
                    index,
                    polygon: part,
                    fiber_angle: ply.fiber_angle(),
                    width: across,
                    length: along,
                });
                index += 1;
            }
        }
    }
    Ok(out)
}

/// Distance within which boolean-engine output is pulled back onto exact
/// geometry.
const SNAP: f64 = 1e-8;

/// Undoes the float snapping of the polygon boolean engine: vertices near
/// an outline vertex take its exact value, vertices near a cut line
/// `n . p = value` are projected onto it.
fn snap(part: Vec<Point2>, outline: &[Point2], n: Point2, lines: &[f64]) -> Vec<Point2> {
    part.into_iter()
        .map(|p| {
            if let Some(&q) = outline.iter().find(|q| (p - **q).norm() < SNAP) {
                return q;
            }
            match lines.iter().find(|&&v| (n.dot(p) - v).abs() < SNAP) {
                Some(&v) => p + n * (v - n.dot(p)),
                None => p,
            }
        })
        .collect()
}

fn extents(poly: &[Point2], n: Point2, d: Point2) -> (f64, f64) {
    let span = |axis: Point2| {
        let (lo, hi) = poly
            .iter()
            .map(|p| p.dot(axis))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        hi - lo
    };
    (span(n), span(d))
}

/// Mean extent along the fibers of the given plies.
pub fn mean_subply_length(plies: &[Ply]) -> f64 {
    if plies.is_empty() {
        return 0.0;
    }
    plies.iter().map(Ply::length).sum::<f64>() / plies.len() as f64
}

/// Rectangle approximation of trim loss: every gap between consecutive
/// seams leaves `(w_s - gap) * mean_length` of scrap. The last sub-ply of
/// each ply and the overlap allowance are not counted.
pub fn trim_loss_estimate(design: &Design, spool_width: f64, mean_length: f64) -> f64 {
    design
        .seams()
        .values()
        .flat_map(|offs| offs.windows(2).map(|w| spool_width - (w[1] - w[0])))
        .sum::<f64>()
        * mean_length
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    /// Area of the ply outlines.
    pub design_area: f64,
    /// Area added by the overlaps.
    pub overlap_area: f64,
    /// Estimated scrap area.
    pub trim_area: f64,
    pub material_cost: f64,
    pub seam_cost: f64,
    pub total: f64,
    pub n_seam: usize,
}

/// Production cost of a design:
/// `(A_d + A_l + A_trim) * (a * w_s + b) + n_seam * c_seam`, with the
/// overlap area measured from the seam chords inside each ply.
pub fn estimate_cost(
    design: &Design,
    plies: &[Ply],
    config: &ManufacturingConfig,
    params: &CostParams,
) -> Result<CostBreakdown> {
    let mut design_area = 0.0;
    let mut overlap_area = 0.0;
    let mut n_seam = 0;
    for ply in plies {
        let offsets = design
            .offsets(&ply.id)
            .ok_or_else(|| PlyError::UnknownPly(ply.id.clone()))?;
        design_area += ply.area();
        for &x in offsets {
            if geometry::seam_polygon_intersects(ply, x) {
                n_seam += 1;
                let chord = geometry::chord_length(&seam_to_line(ply, x), ply.polygon());
                overlap_area += config.overlap_width * chord;
            }
        }
    }
    let h = params.mean_subply_length.unwrap_or_else(|| mean_subply_length(plies));
    let w_s = config.spool_width;
    let trim_area = trim_loss_estimate(design, w_s, h);
    let unit = params.a_mat * w_s + params.b_mat;
    let material_cost = (design_area + overlap_area + trim_area) * unit;
    let seam_cost = n_seam as f64 * params.c_seam;
    Ok(CostBreakdown {
        design_area,
        overlap_area,
        trim_area,
        material_cost,
        seam_cost,
        total: material_cost + seam_cost,
        n_seam,
    })
}

/// The fully linear cost form: design area plus the trim estimate priced
/// per unit area, with the seam count replaced by its continuous bound
/// `w_s * (n - 1) - x_n` per ply.
pub fn linearized_cost(design: &Design, design_area: f64, spool_width: f64, params: &CostParams, mean_length: f64) -> f64 {
    let trim = trim_loss_estimate(design, spool_width, mean_length);
    let seams: f64 = design
        .seams()
        .values()
        .map(|offs| spool_width * (offs.len() as f64 - 1.0) - offs.last().copied().unwrap_or(0.0))
        .sum();
    (design_area + trim) * (params.a_mat * spool_width + params.b_mat) + params.c_seam * seams
}

/// One piece placed on the spool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub piece: String,
    /// Shift along the spool length.
    pub start: f64,
    pub rotated180: bool,
    pub mirrored: bool,
    /// Outline on the spool: x along the length, y across in `[0, w_s]`.
    pub polygon: Vec<Point2>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NestLayout {
    pub placements: Vec<Placement>,
    pub spool_width: f64,
    pub used_length: f64,
    pub trim_area: f64,
}

/// Piece outline with fibers along +x and its bounding box at the origin.
fn spool_frame(piece: &SubPlyPiece) -> Vec<Point2> {
    let d = Point2::new(piece.fiber_angle.cos(), piece.fiber_angle.sin());
    let n = Point2::new(-d.y, d.x);
    let pts: Vec<Point2> = piece.polygon.iter().map(|p| Point2::new(p.dot(d), p.dot(n))).collect();
    let (mx, my) = pts
        .iter()
        .fold((f64::INFINITY, f64::INFINITY), |(a, b), p| (a.min(p.x), b.min(p.y)));
    pts.iter().map(|p| Point2::new(p.x - mx, p.y - my)).collect()
}

/// The four orientations: identity, 180 degree turn, mirror, both.
const CONFIGS: [(bool, bool); 4] = [(false, false), (true, false), (false, true), (true, true)];

fn configure(base: &[Point2], rotated: bool, mirrored: bool) -> Vec<Point2> {
    let (l, w) = base
        .iter()
        .fold((0.0f64, 0.0f64), |(a, b), p| (a.max(p.x), b.max(p.y)));
    let mut pts: Vec<Point2> = base
        .iter()
        .map(|p| {
            let mut q = *p;
            if rotated {
                q = Point2::new(l - q.x, w - q.y);
            }
            if mirrored {
                q = Point2::new(q.x, w - q.y);
            }
            q
        })
        .collect();
    if geometry::signed_area(&pts) < 0.0 {
        pts.reverse();
    }
    pts
}

/// Leftmost or rightmost x of `poly` at heights in `[ya, yb]`, a band
/// containing no vertex strictly inside. Returns the values at both ends.
fn profile(poly: &[Point2], ya: f64, yb: f64, right: bool) -> Option<(f64, f64)> {
    let ym = 0.5 * (ya + yb);
    let n = poly.len();
    let mut best: Option<(f64, f64, f64)> = None;
    for i in 0..n {
        let (p, q) = (poly[i], poly[(i + 1) % n]);
        let (lo, hi) = (p.y.min(q.y), p.y.max(q.y));
        if hi - lo <= 0.0 || lo > ya || hi < yb {
            continue;
        }
        let at = |y: f64| p.x + (q.x - p.x) * (y - p.y) / (q.y - p.y);
        let m = at(ym);
        let better = match best {
            None => true,
            Some((_, bm, _)) => (right && m > bm) || (!right && m < bm),
        };
        if better {
            best = Some((at(ya), m, at(yb)));
        }
    }
    best.map(|(a, _, b)| (a, b))
}

fn breakpoints<'a>(polys: impl Iterator<Item = &'a Vec<Point2>>) -> Vec<f64> {
    let mut ys: Vec<f64> = polys.flat_map(|p| p.iter().map(|v| v.y)).collect();
    ys.sort_by(f64::total_cmp);
    ys.dedup();
    ys
}

/// Shift that puts `piece` flush against the placed pieces, and the area
/// left between them.
fn fit(piece: &[Point2], placed: &[Vec<Point2>]) -> (f64, f64) {
    let ys = breakpoints(placed.iter().chain(std::iter::once(&piece.to_vec())));
    let (pmin, pmax) = piece
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.y), b.max(p.y)));
    let mut bands = Vec::new();
    for w in ys.windows(2) {
        let (ya, yb) = (w[0], w[1]);
        if ya < pmin || yb > pmax || yb <= ya {
            continue;
        }
        let Some(left) = profile(piece, ya, yb, false) else {
            continue;
        };
        let frontier = placed
            .iter()
            .filter_map(|q| profile(q, ya, yb, true))
            .fold((0.0f64, 0.0f64), |acc, (a, b)| {
                if a + b > acc.0 + acc.1 {
                    (a, b)
                } else {
                    acc
                }
            });
        bands.push((ya, yb, left, frontier));
    }
    let shift = bands
        .iter()
        .map(|&(_, _, (la, lb), (fa, fb))| (fa - la).max(fb - lb))
        .fold(0.0, f64::max);
    let gap = bands
        .iter()
        .map(|&(ya, yb, (la, lb), (fa, fb))| 0.5 * (yb - ya) * ((la + shift - fa) + (lb + shift - fb)))
        .sum();
    (shift, gap)
}

/// Sequential nesting along the spool. Each step tries every remaining
/// piece in all four orientations and keeps the one leaving the smallest
/// gap area against the pieces already placed.
pub fn nest(pieces: &[SubPlyPiece], spool_width: f64) -> Result<NestLayout> {
    let base: Vec<Vec<Point2>> = pieces.iter().map(spool_frame).collect();
    for (p, b) in pieces.iter().zip(&base) {
        let w = b.iter().map(|v| v.y).fold(0.0, f64::max);
        if w > spool_width + 1e-9 {
            return Err(PlyError::PieceTooWide {
                id: p.label(),
                width: w,
                spool: spool_width,
            });
        }
    }
    let mut remaining: Vec<usize> = (0..pieces.len()).collect();
    let mut placed: Vec<Vec<Point2>> = Vec::new();
    let mut placements = Vec::new();
    while !remaining.is_empty() {
        let mut best: Option<(f64, usize, usize, f64, Vec<Point2>)> = None;
        for (slot, &i) in remaining.iter().enumerate() {
            for (c, &(rot, mir)) in CONFIGS.iter().enumerate() {
                let shape = configure(&base[i], rot, mir);
                let (shift, gap) = fit(&shape, &placed);
                if best.as_ref().is_none_or(|b| gap < b.0 - 1e-12) {
                    best = Some((gap, slot, c, shift, shape));
                }
            }
        }
        let (_, slot, c, shift, shape) = best.expect("a remaining piece");
        let i = remaining.remove(slot);
        let poly: Vec<Point2> = shape.iter().map(|p| Point2::new(p.x + shift, p.y)).collect();
        placements.push(Placement {
            piece: pieces[i].label(),
            start: shift,
            rotated180: CONFIGS[c].0,
            mirrored: CONFIGS[c].1,
            polygon: poly.clone(),
        });
        placed.push(poly);
    }
    let used_length = placed.iter().flatten().map(|p| p.x).fold(0.0, f64::max);
    let area: f64 = placed.iter().map(|p| polygon_area(p)).sum();
    Ok(NestLayout {
        placements,
        spool_width,
        used_length,
        trim_area: spool_width * used_length - area,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub spool_width: f64,
    pub feasible: bool,
    pub cost: Option<CostBreakdown>,
    #[serde(skip)]
    pub design: Option<Design>,
}

/// Partitions and prices the layup at `steps` spool widths evenly spaced
/// over `[spool_min, spool_max]`. Fails when no width is feasible.
pub fn spool_sweep(
    layup: &[Ply],
    zones: &[StayOutZone],
    config: &ManufacturingConfig,
    params: &CostParams,
    steps: usize,
    sort_by_orientation: bool,
) -> Result<Vec<SweepPoint>> {
    let points = sweep_points(layup, zones, config, params, steps, sort_by_orientation)?;
    if points.iter().all(|p| !p.feasible) {
        return Err(PlyError::SweepInfeasible);
    }
    Ok(points)
}

/// The points of [`spool_sweep`]. Widths without a complete partition are
/// kept as infeasible points, even when that is all of them.
pub fn sweep_points(
    layup: &[Ply],
    zones: &[StayOutZone],
    config: &ManufacturingConfig,
    params: &CostParams,
    steps: usize,
    sort_by_orientation: bool,
) -> Result<Vec<SweepPoint>> {
    params.validate()?;
    if steps < 2 {
        return Err(PlyError::Config("a sweep needs at least 2 steps".into()));
    }
    let widths: Vec<f64> = (0..steps)
        .map(|k| {
            let t = k as f64 / (steps - 1) as f64;
            params.spool_min + t * (params.spool_max - params.spool_min)
        })
        .collect();
    let points: Vec<Result<SweepPoint>> = widths
        .par_iter()
        .map(|&w| {
            let mut cfg = *config;
            cfg.spool_width = w;
            let infeasible = SweepPoint {
                spool_width: w,
                feasible: false,
                cost: None,
                design: None,
            };
            if cfg.validate().is_err() {
                return Ok(infeasible);
            }
            let res = search::partition_layup(layup, zones, &cfg, sort_by_orientation, Strategy::Greedy)?;
            if res.report.outcome != Some(search::Outcome::Complete) {
                return Ok(infeasible);
            }
            let cost = estimate_cost(&res.design, layup, &cfg, params)?;
            Ok(SweepPoint {
                spool_width: w,
                feasible: true,
                cost: Some(cost),
                design: Some(res.design),
            })
        })
        .collect();
    points.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::collections::BTreeMap;
    use std::f64::consts::FRAC_PI_2;

    fn rect(id: &str, w: f64, h: f64, angle: f64) -> Ply {
        let pts = vec![
            Point2::new(0.0, 0.0),
            Point2::new(w, 0.0),
            Point2::new(w, h),
            Point2::new(0.0, h),
        ];
        Ply::new(id, 0, pts, angle).unwrap()
    }

    fn design(id: &str, offs: &[f64]) -> Design {
        let mut m = BTreeMap::new();
        m.insert(id.to_string(), offs.to_vec());
        Design::new(m)
    }

    #[test]
    fn rectangle_pieces() {
        let ply = rect("r", 1.0, 2.0, FRAC_PI_2);
        let cfg = ManufacturingConfig::new(0.3, 0.05, 0.1);
        let pieces = extract_subplies(&design("r", &[0.0, 0.25, 0.5, 0.75]), std::slice::from_ref(&ply), &cfg).unwrap();
        let widths: Vec<f64> = pieces.iter().map(|p| p.width).collect();
        for (got, want) in widths.iter().zip([0.275, 0.3, 0.3, 0.275]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
        let total: f64 = pieces.iter().map(SubPlyPiece::area).sum();
        assert_abs_diff_eq!(total, 2.0 + 3.0 * 0.05 * 2.0, epsilon = 1e-12);

        let whole = extract_subplies(&design("r", &[0.0]), std::slice::from_ref(&ply), &cfg).unwrap();
        assert_eq!(whole.len(), 1);
        assert_abs_diff_eq!(whole[0].area(), ply.area(), epsilon = 1e-12);
    }

    #[test]
    fn notched_ply_splits_into_more_pieces() {
        // U shape opening upward, fibers along y; a seam through the notch
        // leaves the lower-left piece as two arms.
        let u = vec![
            Point2::new(0.0, 0.0),
            Point2::new(0.6, 0.0),
            Point2::new(0.6, 1.0),
            Point2::new(0.4, 1.0),
            Point2::new(0.4, 0.3),
            Point2::new(0.2, 0.3),
            Point2::new(0.2, 1.0),
            Point2::new(0.0, 1.0),
        ];
        let ply = Ply::new("u", 0, u, 0.0).unwrap();
        let cfg = ManufacturingConfig::new(0.8, 0.02, 0.1);
        let pieces = extract_subplies(&design("u", &[0.0, 0.5]), &[ply], &cfg).unwrap();
        assert_eq!(pieces.len(), 3);
        // The arms are split by the boolean engine; widths stay exact.
        for p in &pieces {
            assert!((p.width - 0.51).abs() < 1e-15, "{}", p.width);
        }
    }

    #[test]
    fn trim_estimate_examples() {
        let d = design("r", &[0.0, 0.25, 0.5, 0.75]);
        assert_abs_diff_eq!(trim_loss_estimate(&d, 0.3, 2.0), 0.3, epsilon = 1e-12);
        assert_eq!(trim_loss_estimate(&design("r", &[0.0]), 0.3, 2.0), 0.0);
        assert_abs_diff_eq!(
            trim_loss_estimate(&design("r", &[0.0, 0.3, 0.6]), 0.3, 2.0),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn rectangle_cost_by_hand() {
        let ply = rect("r", 1.0, 2.0, FRAC_PI_2);
        let cfg = ManufacturingConfig::new(0.3, 0.05, 0.1);
        let params = CostParams {
            mean_subply_length: Some(1.0),
            ..CostParams::default()
        };
        let c = estimate_cost(&design("r", &[0.0, 0.25, 0.5, 0.75]), std::slice::from_ref(&ply), &cfg, &params).unwrap();
        assert_eq!(c.n_seam, 3);
        assert_abs_diff_eq!(c.design_area, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.overlap_area, 0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(c.trim_area, 0.15, epsilon = 1e-12);
        assert_abs_diff_eq!(c.total, 2.45 * 2.5 + 0.03, epsilon = 1e-9);

        let bare = estimate_cost(&design("r", &[0.0]), std::slice::from_ref(&ply), &cfg, &params).unwrap();
        assert_abs_diff_eq!(bare.total, 2.0 * 2.5, epsilon = 1e-12);

        let doubled = CostParams {
            c_seam: 0.02,
            ..params
        };
        let d = estimate_cost(&design("r", &[0.0, 0.25, 0.5, 0.75]), &[ply], &cfg, &doubled).unwrap();
        assert_abs_diff_eq!(d.seam_cost, 2.0 * c.seam_cost, epsilon = 1e-15);
        assert_eq!(d.material_cost, c.material_cost);
    }

    fn piece(w: f64, l: f64) -> SubPlyPiece {
        let poly = vec![
            Point2::new(0.0, 0.0),
            Point2::new(l, 0.0),
            Point2::new(l, w),
            Point2::new(0.0, w),
        ];
        SubPlyPiece {
            ply_id: "p".into(),
            index: 0,
            polygon: poly,
            fiber_angle: 0.0,
            width: w,
            length: l,
        }
    }

    #[test]
    fn full_width_rectangles_tile() {
        let pieces: Vec<SubPlyPiece> = (0..4).map(|_| piece(0.3, 1.5)).collect();
        let n = nest(&pieces, 0.3).unwrap();
        assert_abs_diff_eq!(n.used_length, 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(n.trim_area, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn narrow_piece_wastes_the_band_above() {
        let n = nest(&[piece(0.15, 2.0)], 0.3).unwrap();
        assert_abs_diff_eq!(n.trim_area, 0.15 * 2.0, epsilon = 1e-12);
    }

    #[test]
    fn wide_piece_rejected() {
        assert!(matches!(nest(&[piece(0.4, 1.0)], 0.3), Err(PlyError::PieceTooWide { .. })));
    }

    #[test]
    fn trapezoids_close_up() {
        let trap = SubPlyPiece {
            polygon: vec![
                Point2::new(0.0, 0.0),
                Point2::new(2.0, 0.0),
                Point2::new(1.0, 0.3),
                Point2::new(0.0, 0.3),
            ],
            ..piece(0.3, 2.0)
        };
        let n = nest(&[trap.clone(), trap], 0.3).unwrap();
        assert!(!n.placements[0].rotated180);
        assert!(n.placements[1].rotated180 != n.placements[1].mirrored);
        assert_abs_diff_eq!(n.used_length, 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(n.trim_area, 0.0, epsilon = 1e-12);
    }

    fn sweep_layup() -> Vec<Ply> {
        vec![rect("a", 1.0, 0.8, 0.0), rect("b", 1.0, 0.8, FRAC_PI_2)]
    }

    fn sweep_config() -> ManufacturingConfig {
        ManufacturingConfig::new(0.3, 0.01, 0.05)
    }

    #[test]
    fn two_steps_two_points() {
        let params = CostParams::default();
        let pts = spool_sweep(&sweep_layup(), &[], &sweep_config(), &params, 2, false).unwrap();
        assert_eq!(pts.len(), 2);
        assert_abs_diff_eq!(pts[0].spool_width, params.spool_min);
        assert_abs_diff_eq!(pts[1].spool_width, params.spool_max);
    }

    #[test]
    fn wider_spools_never_need_more_seams() {
        let layup = sweep_layup();
        let pts = spool_sweep(&layup, &[], &sweep_config(), &CostParams::default(), 9, false).unwrap();
        assert!(pts.iter().all(|p| p.feasible));
        for ply in &layup {
            let counts: Vec<usize> = pts
                .iter()
                .map(|p| p.design.as_ref().unwrap().offsets(&ply.id).unwrap().len())
                .collect();
            assert!(counts.windows(2).all(|w| w[1] <= w[0]), "{counts:?}");
        }
    }

    #[test]
    fn price_ratio_moves_the_optimum() {
        let argmin = |params: CostParams| {
            let pts = spool_sweep(&sweep_layup(), &[], &sweep_config(), &params, 9, false).unwrap();
            pts.iter()
                .enumerate()
                .filter_map(|(i, p)| p.cost.map(|c| (i, c.total)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap()
                .0
        };
        let material_heavy = argmin(CostParams {
            a_mat: 50.0,
            c_seam: 1e-4,
            ..CostParams::default()
        });
        let seam_heavy = argmin(CostParams {
            a_mat: 0.1,
            c_seam: 1.0,
            ..CostParams::default()
        });
        assert!(material_heavy < seam_heavy, "{material_heavy} vs {seam_heavy}");
    }

    #[test]
    fn all_infeasible_sweep_is_an_error() {
        // A stay-out across the whole ply blocks every seam.
        let zone = StayOutZone::square(Point2::new(0.5, 0.4), 2.0).unwrap();
        let params = CostParams {
            spool_min: 0.1,
            spool_max: 0.2,
            ..CostParams::default()
        };
        let layup = sweep_layup();
        let res = spool_sweep(&layup, std::slice::from_ref(&zone), &sweep_config(), &params, 3, false);
        assert_eq!(res.unwrap_err(), PlyError::SweepInfeasible);
        let pts = sweep_points(&layup, &[zone], &sweep_config(), &params, 3, false).unwrap();
        assert!(pts.iter().all(|p| !p.feasible));
    }
}
