//! Linear constraint rows for seam offsets.
//!
//! Every manufacturing rule becomes rows over seam offsets. Disjunctive
//! rules (`|u - v| >= w`, "outside this interval") are linearized by a
//! [`BranchAssignment`] that fixes which side each pair, seam or triple is
//! on; one assignment selects one linear subspace of the seam design space.
//!
//! Seams are addressed by [`SeamRef`] within a bundle. Index 0 of every ply
//! is the boundary seam at offset 0: it takes part in the gap rows but
//! never in overlap, stay-out or quality rows because it does not cut.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{PlyError, Result};
use crate::geometry::{self, Interval, Strip};
use crate::lp::Relation;
use crate::model::{LineStd, ManufacturingConfig, Ply, Point2, StayOutZone};

/// Fiber angles closer than this are treated as parallel.
pub const ANGLE_EPS: f64 = 1e-9;

/// Row violations up to this size are accepted as numerical noise.
pub const ROW_TOLERANCE: f64 = 1e-8;

/// `m = ceil(M n / N)`: plies per bundle so that stacks of `n` overlaps in
/// each bundle stay within `N` intersecting overlaps over `M` plies.
pub fn bundle_size(plies: usize, max_overlaps: usize, base_overlaps: usize) -> Result<usize> {
    if max_overlaps == 0 {
        return Err(PlyError::Config("maximum overlap count N must be positive".into()));
    }
    if base_overlaps == 0 || base_overlaps > max_overlaps || max_overlaps > plies {
        return Err(PlyError::Config(format!(
            "need 1 <= n <= N <= M, got n={base_overlaps}, N={max_overlaps}, M={plies}"
        )));
    }
    Ok((plies * base_overlaps).div_ceil(max_overlaps))
}

/// An ordered group of plies whose overlaps are constrained jointly.
#[derive(Debug, Clone, PartialEq)]
pub struct Bundle {
    pub plies: Vec<Ply>,
}

impl Bundle {
    pub fn new(plies: Vec<Ply>) -> Self {
        Self { plies }
    }

    pub fn len(&self) -> usize {
        self.plies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.plies.is_empty()
    }

    /// Distinct fiber angles in first-seen order.
    pub fn orientations(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for p in &self.plies {
            if !out.iter().any(|a| same_angle(*a, p.fiber_angle())) {
                out.push(p.fiber_angle());
            }
        }
        out
    }
}

pub fn same_angle(a: f64, b: f64) -> bool {
    (a - b).abs() < ANGLE_EPS
}

/// Angular separation of two fiber directions, in `[0, pi/2]`.
fn separation(a: f64, b: f64) -> f64 {
    let d = (a - b).abs() % std::f64::consts::PI;
    d.min(std::f64::consts::PI - d)
}

/// Splits a layup (ordered by stack index) into bundles of `m` plies.
///
/// With sorting enabled the plies are grouped by orientation first: an
/// orientation with at least `m` remaining plies fills a bundle on its own,
/// otherwise the largest remaining group is topped up with the most
/// perpendicular other groups. Plies keep stack order inside a bundle.
pub fn make_bundles(layup: &[Ply], m: usize, sort_by_orientation: bool) -> Result<Vec<Bundle>> {
    if layup.is_empty() {
        return Err(PlyError::EmptyLayup);
    }
    if m == 0 {
        return Err(PlyError::Config("bundle size must be at least 1".into()));
    }
    let mut ordered: Vec<Ply> = layup.to_vec();
    ordered.sort_by_key(|p| p.stack_index);
    if !sort_by_orientation {
        return Ok(ordered.chunks(m).map(|c| Bundle::new(c.to_vec())).collect());
    }

    // Orientation pools in order of first appearance in the stack.
    let mut pools: Vec<(f64, Vec<Ply>)> = Vec::new();
    for p in ordered {
        match pools.iter_mut().find(|(a, _)| same_angle(*a, p.fiber_angle())) {
            Some((_, v)) => v.push(p),
            None => pools.push((p.fiber_angle(), vec![p])),
        }
    }
    pools.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut bundles = Vec::new();
    while pools.iter().any(|(_, v)| !v.is_empty()) {
        let mut bundle: Vec<Ply> = Vec::with_capacity(m);
        if let Some((_, pool)) = pools.iter_mut().find(|(_, v)| v.len() >= m) {
            bundle.extend(pool.drain(..m));
        } else {
            // Largest pool first (ties: smallest angle), then partners by
            // decreasing perpendicularity, larger pools first on ties.
            let seed = (0..pools.len())
                .filter(|&i| !pools[i].1.is_empty())
                .max_by(|&i, &j| pools[i].1.len().cmp(&pools[j].1.len()).then(j.cmp(&i)))
                .expect("a nonempty pool exists");
            let seed_angle = pools[seed].0;
            bundle.append(&mut pools[seed].1);
            let mut partners: Vec<usize> = (0..pools.len())
                .filter(|&i| i != seed && !pools[i].1.is_empty())
                .collect();
            partners.sort_by(|&i, &j| {
                separation(pools[j].0, seed_angle)
                    .total_cmp(&separation(pools[i].0, seed_angle))
                    .then(pools[j].1.len().cmp(&pools[i].1.len()))
                    .then(i.cmp(&j))
            });
            for i in partners {
                let need = m - bundle.len();
                if need == 0 {
                    break;
                }
                let take = need.min(pools[i].1.len());
                bundle.extend(pools[i].1.drain(..take));
            }
        }
        bundle.sort_by_key(|p| p.stack_index);
        bundles.push(Bundle::new(bundle));
    }
    Ok(bundles)
}

/// Prohibited offsets on `ply` induced by stay-out zones.
///
/// Each zone is projected onto the ply's transverse axis, dilated by half
/// the overlap width so the whole overlap band stays clear, clipped to the
/// ply's offset range and merged.
pub fn stayout_intervals(
    ply: &Ply,
    zones: &[StayOutZone],
    config: &ManufacturingConfig,
) -> Vec<Interval> {
    let axis = ply.transverse();
    let base = ply.origin_projection();
    let range = Interval::new(0.0, ply.width());
    let raw = zones
        .iter()
        .filter_map(|z| {
            geometry::project_polygon(z.polygon(), axis)
                .ok()
                .map(|iv| iv.shift(-base).dilate(config.half_overlap()))
                .and_then(|iv| iv.intersect(&range))
        })
        .collect();
    Interval::merge(raw)
}

/// A seam inside a bundle: ply position in the bundle and seam index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SeamRef {
    pub ply: usize,
    pub index: usize,
}

impl SeamRef {
    pub fn new(ply: usize, index: usize) -> Self {
        Self { ply, index }
    }

    pub fn is_boundary(&self) -> bool {
        self.index == 0
    }
}

impl std::fmt::Display for SeamRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ply#{}/seam#{}", self.ply, self.index)
    }
}

/// Seam offsets per bundle ply; index 0 is the boundary seam.
pub type SeamTable = Vec<Vec<f64>>;

pub fn offset(table: &SeamTable, s: SeamRef) -> f64 {
    table[s.ply][s.index]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VertexClass {
    Small,
    Flimsy,
}

/// What a row encodes, for diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RowKind {
    /// Gap between seam `index - 1` and `index` at most `w_s - w_l`.
    GapMax { ply: usize, index: usize },
    /// Gap between seam `index - 1` and `index` at least `w_min`.
    GapMin { ply: usize, index: usize },
    Parallel { a: SeamRef, b: SeamRef },
    Triple { seams: [SeamRef; 3], combo: u8 },
    StayOut { seam: SeamRef, interval: usize },
    Quality { seam: SeamRef, class: VertexClass, vertex: usize },
    /// Remaining strip after the last seam fits on one spool.
    Coverage { ply: usize },
}

/// `sum(coef * offset) (<= | >= | =) rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub terms: Vec<(SeamRef, f64)>,
    pub relation: Relation,
    pub rhs: f64,
    pub kind: RowKind,
}

impl Row {
    pub fn lhs(&self, table: &SeamTable) -> f64 {
        self.terms.iter().map(|&(s, a)| a * offset(table, s)).sum()
    }

    /// Amount by which the row is violated at `table` (0 when satisfied).
    pub fn violation(&self, table: &SeamTable) -> f64 {
        let lhs = self.lhs(table);
        let v = match self.relation {
            Relation::Le => lhs - self.rhs,
            Relation::Ge => self.rhs - lhs,
            Relation::Eq => (lhs - self.rhs).abs(),
        };
        v.max(0.0)
    }
}

/// Which side of a disjunction holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Below,
    Above,
}

impl Side {
    fn of(value: f64, pivot: f64) -> Side {
        if value >= pivot {
            Side::Above
        } else {
            Side::Below
        }
    }

    fn sign(self) -> f64 {
        match self {
            Side::Below => -1.0,
            Side::Above => 1.0,
        }
    }
}

/// Branch choice for every disjunctive constraint in scope.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BranchAssignment {
    /// Key `(a, b)` with `a < b`; `Above` means `b` lies above `a`.
    pub parallel: BTreeMap<(SeamRef, SeamRef), Side>,
    pub stayout: BTreeMap<(SeamRef, usize), Side>,
    pub quality: BTreeMap<(SeamRef, VertexClass, usize), Side>,
    /// Sign of each of the three linear combinations of a triple.
    pub triple: BTreeMap<[SeamRef; 3], [Side; 3]>,
}

/// Per-ply data shared by all row generators.
#[derive(Debug, Clone)]
pub struct PlyFrame {
    pub normal: Point2,
    pub origin_projection: f64,
    pub width: f64,
    pub angle: f64,
    pub stayouts: Vec<Interval>,
    /// Offsets of small-cone vertices.
    pub small: Vec<f64>,
    /// Offsets of flimsy-cone vertices.
    pub flimsy: Vec<f64>,
}

impl PlyFrame {
    pub fn new(ply: &Ply, zones: &[StayOutZone], config: &ManufacturingConfig) -> Self {
        let cls = geometry::classify_vertices(ply);
        Self {
            normal: ply.transverse(),
            origin_projection: ply.origin_projection(),
            width: ply.width(),
            angle: ply.fiber_angle(),
            stayouts: stayout_intervals(ply, zones, config),
            small: cls.small.iter().map(|v| ply.offset_of(*v)).collect(),
            flimsy: cls.flimsy.iter().map(|v| ply.offset_of(*v)).collect(),
        }
    }

    fn vertices(&self, class: VertexClass) -> &[f64] {
        match class {
            VertexClass::Small => &self.small,
            VertexClass::Flimsy => &self.flimsy,
        }
    }
}

/// A bundle with its precomputed frames and stay-out projections.
#[derive(Debug, Clone)]
pub struct BundleContext<'a> {
    pub plies: &'a [Ply],
    pub zones: &'a [StayOutZone],
    pub frames: Vec<PlyFrame>,
    pub config: ManufacturingConfig,
}

impl<'a> BundleContext<'a> {
    pub fn new(plies: &'a [Ply], zones: &'a [StayOutZone], config: ManufacturingConfig) -> Self {
        let frames = plies.iter().map(|p| PlyFrame::new(p, zones, &config)).collect();
        Self {
            plies,
            zones,
            frames,
            config,
        }
    }

    fn minimum(&self, class: VertexClass) -> f64 {
        match class {
            VertexClass::Small => self.config.small_min,
            VertexClass::Flimsy => self.config.flimsy_min,
        }
    }

    /// Absolute transverse coordinate of a seam: `d_perp . O + x`.
    pub fn absolute(&self, table: &SeamTable, s: SeamRef) -> f64 {
        self.frames[s.ply].origin_projection + offset(table, s)
    }

    pub fn line(&self, table: &SeamTable, s: SeamRef) -> LineStd {
        let f = &self.frames[s.ply];
        LineStd {
            a: f.normal.x,
            b: f.normal.y,
            c: -f.origin_projection - offset(table, s),
        }
    }

    pub fn strip(&self, table: &SeamTable, s: SeamRef) -> Strip {
        Strip::new(self.line(table, s), self.config.half_overlap())
    }

    /// Seams that cut their ply, i.e. all but the boundary seams.
    pub fn interior_seams(&self, table: &SeamTable) -> Vec<SeamRef> {
        table
            .iter()
            .enumerate()
            .flat_map(|(p, offs)| (1..offs.len()).map(move |i| SeamRef::new(p, i)))
            .collect()
    }

    /// Interior seams grouped by orientation, classes in angle order.
    pub fn orientation_classes(&self, table: &SeamTable) -> Vec<Vec<SeamRef>> {
        let mut classes: Vec<(f64, Vec<SeamRef>)> = Vec::new();
        for s in self.interior_seams(table) {
            let angle = self.frames[s.ply].angle;
            match classes.iter_mut().find(|(a, _)| same_angle(*a, angle)) {
                Some((_, v)) => v.push(s),
                None => classes.push((angle, vec![s])),
            }
        }
        classes.sort_by(|a, b| a.0.total_cmp(&b.0));
        classes.into_iter().map(|(_, v)| v).collect()
    }

    /// Same-orientation interior seam pairs `(a, b)` with `a < b`.
    pub fn parallel_pairs(&self, table: &SeamTable) -> Vec<(SeamRef, SeamRef)> {
        let mut out = Vec::new();
        for class in self.orientation_classes(table) {
            for (i, &a) in class.iter().enumerate() {
                for &b in &class[i + 1..] {
                    out.push((a.min(b), a.max(b)));
                }
            }
        }
        out.sort();
        out
    }

    fn in_union(&self, p: Point2, plies: [usize; 3]) -> bool {
        plies
            .iter()
            .any(|&i| geometry::point_in_polygon(p, self.plies[i].polygon()))
    }

    /// Mutually non-parallel triples whose three pairwise seam
    /// intersections lie inside the union of the three ply outlines.
    pub fn triples_in_scope(&self, table: &SeamTable) -> Vec<[SeamRef; 3]> {
        let classes = self.orientation_classes(table);
        let lines: BTreeMap<SeamRef, LineStd> = classes
            .iter()
            .flatten()
            .map(|&s| (s, self.line(table, s)))
            .collect();
        let mut out = Vec::new();
        for ci in 0..classes.len() {
            for cj in ci + 1..classes.len() {
                for ck in cj + 1..classes.len() {
                    for &a in &classes[ci] {
                        for &b in &classes[cj] {
                            let Some(pab) = geometry::line_intersection(&lines[&a], &lines[&b])
                            else {
                                continue;
                            };
                            for &c in &classes[ck] {
                                let plies = [a.ply, b.ply, c.ply];
                                if !self.in_union(pab, plies) {
                                    continue;
                                }
                                let inside = |u: SeamRef, v: SeamRef| {
                                    geometry::line_intersection(&lines[&u], &lines[&v])
                                        .is_some_and(|p| self.in_union(p, plies))
                                };
                                if inside(b, c) && inside(c, a) {
                                    let mut t = [a, b, c];
                                    t.sort();
                                    out.push(t);
                                }
                            }
                        }
                    }
                }
            }
        }
        out.sort();
        out
    }

    /// Branches that hold at the current offsets, for every constraint in
    /// scope.
    pub fn probe(&self, table: &SeamTable) -> BranchAssignment {
        let mut br = BranchAssignment::default();
        for (a, b) in self.parallel_pairs(table) {
            let side = Side::of(self.absolute(table, b), self.absolute(table, a));
            br.parallel.insert((a, b), side);
        }
        for s in self.interior_seams(table) {
            let x = offset(table, s);
            let f = &self.frames[s.ply];
            for (k, iv) in f.stayouts.iter().enumerate() {
                br.stayout.insert((s, k), Side::of(x, iv.mid()));
            }
            for class in [VertexClass::Small, VertexClass::Flimsy] {
                for (k, &v) in f.vertices(class).iter().enumerate() {
                    br.quality.insert((s, class, k), Side::of(x, v));
                }
            }
        }
        for t in self.triples_in_scope(table) {
            let sides = [0u8, 1, 2].map(|combo| {
                let (coef, _) = triple_combination(self, table, t, combo);
                Side::of(triple_value(self, table, t, &coef), 0.0)
            });
            br.triple.insert(t, sides);
        }
        br
    }
}

fn missing(what: String) -> PlyError {
    PlyError::MissingBranch(what)
}

/// Gap rows for one ply: `w_min <= x_i - x_{i-1} <= w_s - w_l`.
pub fn spool_rows(ctx: &BundleContext, ply: usize, table: &SeamTable) -> Vec<Row> {
    let mut rows = Vec::new();
    for i in 1..table[ply].len() {
        let (prev, cur) = (SeamRef::new(ply, i - 1), SeamRef::new(ply, i));
        let terms = vec![(cur, 1.0), (prev, -1.0)];
        rows.push(Row {
            terms: terms.clone(),
            relation: Relation::Le,
            rhs: ctx.config.max_gap(),
            kind: RowKind::GapMax { ply, index: i },
        });
        rows.push(Row {
            terms,
            relation: Relation::Ge,
            rhs: ctx.config.min_subply_width,
            kind: RowKind::GapMin { ply, index: i },
        });
    }
    rows
}

/// Coverage row for a finished ply: `x_last >= width + w_l / 2 - w_s`.
pub fn coverage_row(ctx: &BundleContext, ply: usize, table: &SeamTable) -> Row {
    let last = SeamRef::new(ply, table[ply].len() - 1);
    Row {
        terms: vec![(last, 1.0)],
        relation: Relation::Ge,
        rhs: ctx.frames[ply].width + ctx.config.half_overlap() - ctx.config.spool_width,
        kind: RowKind::Coverage { ply },
    }
}

fn parallel_row(ctx: &BundleContext, a: SeamRef, b: SeamRef, side: Side) -> Row {
    // Absolute positions differ from offsets by the origin projections.
    let shift = ctx.frames[b.ply].origin_projection - ctx.frames[a.ply].origin_projection;
    let s = side.sign();
    Row {
        terms: vec![(b, s), (a, -s)],
        relation: Relation::Ge,
        rhs: ctx.config.overlap_width - s * shift,
        kind: RowKind::Parallel { a, b },
    }
}

/// One row `|p_b - p_a| >= w_l` per same-orientation interior seam pair.
pub fn parallel_rows(
    ctx: &BundleContext,
    table: &SeamTable,
    branch: &BranchAssignment,
) -> Result<Vec<Row>> {
    ctx.parallel_pairs(table)
        .into_iter()
        .map(|(a, b)| {
            let side = branch
                .parallel
                .get(&(a, b))
                .ok_or_else(|| missing(format!("parallel pair {a} / {b}")))?;
            Ok(parallel_row(ctx, a, b, *side))
        })
        .collect()
}

/// Rows equivalent to [`parallel_rows`] under a branch that totally orders
/// each orientation class: only consecutive seams in that order are
/// constrained, the remaining pairs follow by transitivity.
pub fn parallel_chain_rows(
    ctx: &BundleContext,
    table: &SeamTable,
    branch: &BranchAssignment,
) -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    for mut class in ctx.orientation_classes(table) {
        let mut err = None;
        class.sort_by(|&u, &v| {
            if u == v {
                return std::cmp::Ordering::Equal;
            }
            let (a, b) = (u.min(v), u.max(v));
            let Some(side) = branch.parallel.get(&(a, b)) else {
                err.get_or_insert_with(|| missing(format!("parallel pair {a} / {b}")));
                return u.cmp(&v);
            };
            // Above: b sits above a.
            let b_above = *side == Side::Above;
            match (u == a, b_above) {
                (true, true) | (false, false) => std::cmp::Ordering::Less,
                _ => std::cmp::Ordering::Greater,
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
        for w in class.windows(2) {
            let (lower, upper) = (w[0], w[1]);
            let (a, b) = (lower.min(upper), lower.max(upper));
            let side = if a == lower { Side::Above } else { Side::Below };
            rows.push(parallel_row(ctx, a, b, side));
        }
    }
    Ok(rows)
}

/// Coefficients `L` of the combination `(uv)w` for triple `t` and the
/// overlap-free distance `d_min = (w_l / 2) * sum |L|`.
///
/// For seams `u`, `v` crossing at `P_uv`, the signed distance of `P_uv` to
/// seam `w` is `L_u c_u + L_v c_v + c_w` with `L_w = 1`. The rhombus
/// `strip_u ∩ strip_v` reaches `(w_l / 2) (|L_u| + |L_v|)` towards the
/// normal of `w`, so the three strips are disjoint exactly when that
/// distance exceeds the rhombus reach plus the half-width of strip `w`.
pub fn triple_combination(
    ctx: &BundleContext,
    table: &SeamTable,
    t: [SeamRef; 3],
    combo: u8,
) -> ([f64; 3], f64) {
    let (iu, iv, iw) = match combo {
        0 => (0, 1, 2),
        1 => (1, 2, 0),
        _ => (2, 0, 1),
    };
    let (u, v, w) = (
        ctx.line(table, t[iu]),
        ctx.line(table, t[iv]),
        ctx.line(table, t[iw]),
    );
    let det = u.a * v.b - v.a * u.b;
    let mut coef = [0.0; 3];
    coef[iu] = (v.a * w.b - w.a * v.b) / det;
    coef[iv] = (w.a * u.b - u.a * w.b) / det;
    coef[iw] = 1.0;
    let dmin = ctx.config.half_overlap() * coef.iter().map(|c| c.abs()).sum::<f64>();
    (coef, dmin)
}

fn triple_value(ctx: &BundleContext, table: &SeamTable, t: [SeamRef; 3], coef: &[f64; 3]) -> f64 {
    (0..3).map(|i| coef[i] * ctx.line(table, t[i]).c).sum()
}

/// Three rows per in-scope triple, one for each of `(ij)k`, `(jk)i`,
/// `(ki)j`, each linear in the offsets under the branch sign.
pub fn triple_rows(
    ctx: &BundleContext,
    table: &SeamTable,
    branch: &BranchAssignment,
) -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    for t in ctx.triples_in_scope(table) {
        let sides = branch
            .triple
            .get(&t)
            .ok_or_else(|| missing(format!("triple {} / {} / {}", t[0], t[1], t[2])))?;
        for combo in 0..3u8 {
            rows.push(triple_row(ctx, table, t, combo, sides[combo as usize]));
        }
    }
    Ok(rows)
}

/// `s * sum L_i c_i >= d_min` with `c_i = -(d_perp . O)_i - x_i`.
pub fn triple_row(
    ctx: &BundleContext,
    table: &SeamTable,
    t: [SeamRef; 3],
    combo: u8,
    side: Side,
) -> Row {
    let (coef, dmin) = triple_combination(ctx, table, t, combo);
    let s = side.sign();
    let constant: f64 = (0..3)
        .map(|i| coef[i] * ctx.frames[t[i].ply].origin_projection)
        .sum();
    Row {
        terms: (0..3).map(|i| (t[i], -s * coef[i])).collect(),
        relation: Relation::Ge,
        rhs: dmin + s * constant,
        kind: RowKind::Triple { seams: t, combo },
    }
}

/// Stay-out rows: every interior seam stays on its branch side of every
/// prohibited interval of its ply.
pub fn stayout_rows(
    ctx: &BundleContext,
    table: &SeamTable,
    branch: &BranchAssignment,
) -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    for s in ctx.interior_seams(table) {
        for (k, iv) in ctx.frames[s.ply].stayouts.iter().enumerate() {
            let side = branch
                .stayout
                .get(&(s, k))
                .ok_or_else(|| missing(format!("stay-out {k} for {s}")))?;
            let (relation, rhs) = match side {
                Side::Below => (Relation::Le, iv.lo),
                Side::Above => (Relation::Ge, iv.hi),
            };
            rows.push(Row {
                terms: vec![(s, 1.0)],
                relation,
                rhs,
                kind: RowKind::StayOut { seam: s, interval: k },
            });
        }
    }
    Ok(rows)
}

/// Ply-quality rows `|x - x(V)| >= min` for every interior seam of `ply`
/// and every classified vertex.
pub fn quality_rows(
    ctx: &BundleContext,
    ply: usize,
    table: &SeamTable,
    branch: &BranchAssignment,
) -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    let f = &ctx.frames[ply];
    for index in 1..table[ply].len() {
        let s = SeamRef::new(ply, index);
        for class in [VertexClass::Small, VertexClass::Flimsy] {
            let min = ctx.minimum(class);
            for (k, &v) in f.vertices(class).iter().enumerate() {
                let side = branch
                    .quality
                    .get(&(s, class, k))
                    .ok_or_else(|| missing(format!("{class:?} vertex {k} for {s}")))?;
                let (relation, rhs) = match side {
                    Side::Below => (Relation::Le, v - min),
                    Side::Above => (Relation::Ge, v + min),
                };
                rows.push(Row {
                    terms: vec![(s, 1.0)],
                    relation,
                    rhs,
                    kind: RowKind::Quality {
                        seam: s,
                        class,
                        vertex: k,
                    },
                });
            }
        }
    }
    Ok(rows)
}

/// Every row of the bundle at `branch`. `covered` marks plies whose
/// coverage row applies.
pub fn all_rows(
    ctx: &BundleContext,
    table: &SeamTable,
    branch: &BranchAssignment,
    covered: &[bool],
) -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    for p in 0..table.len() {
        rows.extend(spool_rows(ctx, p, table));
        rows.extend(quality_rows(ctx, p, table, branch)?);
        if covered[p] {
            rows.push(coverage_row(ctx, p, table));
        }
    }
    rows.extend(parallel_rows(ctx, table, branch)?);
    rows.extend(triple_rows(ctx, table, branch)?);
    rows.extend(stayout_rows(ctx, table, branch)?);
    Ok(rows)
}

/// A candidate interval for the next seam and the branches it induces.
#[derive(Debug, Clone)]
pub struct Subspace {
    pub interval: Interval,
    pub branch: BranchAssignment,
    /// Offset used to probe the branches.
    pub probe: f64,
}

/// Candidate linear subspaces for a new seam on `ply`, farthest first.
///
/// The admissible window `[x_prev + w_min, x_prev + w_s - w_l]` (capped at
/// the ply width) loses every band in which the new seam would violate a
/// stay-out, ply-quality, parallel-overlap or triple-overlap rule against
/// the seams already placed. Each remaining interval is paired with the
/// branches probed at its midpoint.
pub fn enumerate_subspaces(ctx: &BundleContext, table: &SeamTable, ply: usize) -> Vec<Subspace> {
    let cfg = &ctx.config;
    let frame = &ctx.frames[ply];
    let prev = *table[ply].last().expect("boundary seam present");
    let hi = (prev + cfg.max_gap()).min(frame.width);
    let lo = prev + cfg.min_subply_width;
    if lo > hi {
        return Vec::new();
    }
    let mut cuts: Vec<Interval> = frame.stayouts.clone();
    for class in [VertexClass::Small, VertexClass::Flimsy] {
        let r = ctx.minimum(class);
        cuts.extend(frame.vertices(class).iter().map(|&v| Interval::new(v - r, v + r)));
    }

    let interior = ctx.interior_seams(table);
    let new_line = |x: f64| LineStd {
        a: frame.normal.x,
        b: frame.normal.y,
        c: -frame.origin_projection - x,
    };
    for &s in &interior {
        if same_angle(ctx.frames[s.ply].angle, frame.angle) {
            let center = ctx.absolute(table, s) - frame.origin_projection;
            cuts.push(Interval::new(center - cfg.overlap_width, center + cfg.overlap_width));
        }
    }
    // Triple bands: the new seam must keep clear of every crossing of two
    // existing seams of other orientations.
    let others: Vec<SeamRef> = interior
        .iter()
        .copied()
        .filter(|s| !same_angle(ctx.frames[s.ply].angle, frame.angle))
        .collect();
    let probe_line = new_line(0.0);
    for (i, &a) in others.iter().enumerate() {
        for &b in &others[i + 1..] {
            if same_angle(ctx.frames[a.ply].angle, ctx.frames[b.ply].angle) {
                continue;
            }
            let (la, lb) = (ctx.line(table, a), ctx.line(table, b));
            let Some(p) = geometry::line_intersection(&la, &lb) else {
                continue;
            };
            if !ctx.in_union(p, [a.ply, b.ply, ply]) {
                continue;
            }
            let det = la.a * lb.b - lb.a * la.b;
            let ca = (lb.a * probe_line.b - probe_line.a * lb.b) / det;
            let cb = (probe_line.a * la.b - la.a * probe_line.b) / det;
            let r = cfg.half_overlap() * (ca.abs() + cb.abs() + 1.0);
            let center = frame.normal.dot(p) - frame.origin_projection;
            cuts.push(Interval::new(center - r, center + r));
        }
    }

    let mut parts = vec![Interval::new(lo, hi)];
    for cut in &cuts {
        parts = Interval::subtract_open(&parts, cut);
        if parts.is_empty() {
            return Vec::new();
        }
    }
    parts.sort_by(|a, b| b.hi.total_cmp(&a.hi));
    parts
        .into_iter()
        .map(|interval| {
            let probe = interval.mid();
            let mut probed = table.clone();
            probed[ply].push(probe);
            Subspace {
                interval,
                branch: ctx.probe(&probed),
                probe,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn rect(id: &str, stack: u32, w: f64, h: f64, angle: f64) -> Ply {
        let pts = vec![
            Point2::new(0.0, 0.0),
            Point2::new(w, 0.0),
            Point2::new(w, h),
            Point2::new(0.0, h),
        ];
        Ply::new(id, stack, pts, angle).unwrap()
    }

    #[test]
    fn bundle_size_examples() {
        assert_eq!(bundle_size(24, 6, 2).unwrap(), 8);
        assert_eq!(bundle_size(24, 24, 2).unwrap(), 2);
        assert_eq!(bundle_size(24, 4, 2).unwrap(), 12);
        assert!(bundle_size(24, 0, 2).is_err());
    }

    fn layup_three_orientations() -> Vec<Ply> {
        (0..24)
            .map(|i| {
                let angle = [0.0, PI / 3.0, 2.0 * PI / 3.0][i % 3];
                rect(&format!("p{i}"), i as u32, 1.0, 1.0, angle)
            })
            .collect()
    }

    #[test]
    fn sorted_bundles_of_eight_are_single_orientation() {
        let bundles = make_bundles(&layup_three_orientations(), 8, true).unwrap();
        assert_eq!(bundles.len(), 3);
        for b in &bundles {
            assert_eq!(b.len(), 8);
            assert_eq!(b.orientations().len(), 1);
        }
    }

    #[test]
    fn sorted_bundles_of_twelve_pair_orientations() {
        let bundles = make_bundles(&layup_three_orientations(), 12, true).unwrap();
        assert_eq!(bundles.len(), 2);
        for b in &bundles {
            assert_eq!(b.len(), 12);
            assert_eq!(b.orientations().len(), 2);
        }
    }

    #[test]
    fn perpendicular_partner_preferred() {
        let angles = [0.0, PI / 4.0, FRAC_PI_2, 3.0 * PI / 4.0];
        let layup: Vec<Ply> = (0..24)
            .map(|i| rect(&format!("p{i}"), i as u32, 1.0, 1.0, angles[i % 4]))
            .collect();
        let bundles = make_bundles(&layup, 12, true).unwrap();
        assert_eq!(bundles.len(), 2);
        for b in &bundles {
            let o = b.orientations();
            assert_eq!(o.len(), 2);
            assert_abs_diff_eq!(separation(o[0], o[1]), FRAC_PI_2, epsilon = 1e-12);
        }
    }

    #[test]
    fn whole_layup_bundle_and_empty_layup() {
        let layup = layup_three_orientations();
        let b = make_bundles(&layup, 24, false).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b[0].len(), 24);
        assert!(matches!(make_bundles(&[], 4, true), Err(PlyError::EmptyLayup)));
    }

    fn cfg() -> ManufacturingConfig {
        ManufacturingConfig::new(0.3, 0.05, 0.1)
    }

    #[test]
    fn spool_row_bounds() {
        let plies = vec![rect("a", 0, 1.0, 1.0, FRAC_PI_2)];
        let ctx = BundleContext::new(&plies, &[], cfg());
        let rows = spool_rows(&ctx, 0, &vec![vec![0.0, 0.2]]);
        assert_eq!(rows.len(), 2);
        assert_abs_diff_eq!(rows[0].rhs, 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(rows[1].rhs, 0.1, epsilon = 1e-15);
        assert!(spool_rows(&ctx, 0, &vec![vec![0.0]]).is_empty());
    }

    #[test]
    fn parallel_row_branch() {
        let plies = vec![rect("a", 0, 1.0, 1.0, 0.0), rect("b", 1, 1.0, 1.0, 0.0)];
        let ctx = BundleContext::new(&plies, &[], cfg());
        let table = vec![vec![0.0, 0.25], vec![0.0, 0.4]];
        let br = ctx.probe(&table);
        let rows = parallel_rows(&ctx, &table, &br).unwrap();
        assert_eq!(rows.len(), 1);
        let r = &rows[0];
        // x_b - x_a >= w_l
        assert_eq!(r.terms, vec![(SeamRef::new(1, 1), 1.0), (SeamRef::new(0, 1), -1.0)]);
        assert_abs_diff_eq!(r.rhs, 0.05, epsilon = 1e-15);
        assert_eq!(r.violation(&table), 0.0);
        assert!(parallel_rows(&ctx, &table, &BranchAssignment::default()).is_err());
    }

    #[test]
    fn non_parallel_plies_have_no_parallel_rows() {
        let plies = vec![rect("a", 0, 1.0, 1.0, 0.0), rect("b", 1, 1.0, 1.0, PI / 3.0)];
        let ctx = BundleContext::new(&plies, &[], cfg());
        let table = vec![vec![0.0, 0.25], vec![0.0, 0.4]];
        let rows = parallel_rows(&ctx, &table, &ctx.probe(&table)).unwrap();
        assert!(rows.is_empty());
    }

    #[test]
    fn chain_rows_match_pairwise_feasibility() {
        let plies: Vec<Ply> = (0..3).map(|i| rect(&format!("p{i}"), i, 1.0, 1.0, 0.0)).collect();
        let ctx = BundleContext::new(&plies, &[], cfg());
        let table = vec![vec![0.0, 0.3, 0.6], vec![0.0, 0.2, 0.5], vec![0.0, 0.1, 0.4]];
        let br = ctx.probe(&table);
        let chain = parallel_chain_rows(&ctx, &table, &br).unwrap();
        let all = parallel_rows(&ctx, &table, &br).unwrap();
        assert_eq!(chain.len(), 5);
        assert_eq!(all.len(), 15);
        for rows in [&chain, &all] {
            assert!(rows.iter().all(|r| r.violation(&table) == 0.0));
        }
        // Squeeze two seams together: both formulations notice.
        let mut bad = table.clone();
        bad[1][1] = 0.28;
        assert!(chain.iter().any(|r| r.violation(&bad) > 0.0));
        assert!(all.iter().any(|r| r.violation(&bad) > 0.0));
    }

    #[test]
    fn stayout_interval_dilation() {
        // Fiber along y on a unit square with origin at x = 0: use angle pi/2
        // mirrored so offsets grow with x. d_perp = (-1, 0), origin at x = 1,
        // so offset = 1 - x. A zone over x in [0.4, 0.6] maps to [0.4, 0.6].
        let ply = rect("a", 0, 1.0, 1.0, FRAC_PI_2);
        let zone = StayOutZone::new(vec![
            Point2::new(0.4, 0.2),
            Point2::new(0.6, 0.2),
            Point2::new(0.6, 0.5),
            Point2::new(0.4, 0.5),
        ])
        .unwrap();
        let iv = stayout_intervals(&ply, std::slice::from_ref(&zone), &cfg());
        assert_eq!(iv.len(), 1);
        assert_abs_diff_eq!(iv[0].lo, 0.375, epsilon = 1e-12);
        assert_abs_diff_eq!(iv[0].hi, 0.625, epsilon = 1e-12);

        let far = StayOutZone::square(Point2::new(5.0, 0.5), 0.2).unwrap();
        assert!(stayout_intervals(&ply, &[far], &cfg()).is_empty());

        let overlapping = StayOutZone::square(Point2::new(0.65, 0.5), 0.1).unwrap();
        let iv = stayout_intervals(&ply, &[zone, overlapping], &cfg());
        assert_eq!(iv.len(), 1);
    }

    #[test]
    fn quality_rows_examples() {
        let diamond = vec![
            Point2::new(1.0, 0.0),
            Point2::new(0.0, 1.0),
            Point2::new(-1.0, 0.0),
            Point2::new(0.0, -1.0),
        ];
        let ply = Ply::new("d", 0, diamond, FRAC_PI_2).unwrap();
        let mut c = cfg();
        c.small_min = 0.15;
        let plies = vec![ply];
        let ctx = BundleContext::new(&plies, &[], c);
        // Small vertices sit at offsets 0 and 2.
        let mut f = ctx.frames[0].small.clone();
        f.sort_by(f64::total_cmp);
        assert_eq!(f, vec![0.0, 2.0]);
        let table = vec![vec![0.0, 0.5]];
        let br = ctx.probe(&table);
        let rows = quality_rows(&ctx, 0, &table, &br).unwrap();
        assert_eq!(rows.len(), 2);
        let above = rows.iter().find(|r| r.relation == Relation::Ge).unwrap();
        assert_abs_diff_eq!(above.rhs, 0.15, epsilon = 1e-12);
        let below = rows.iter().find(|r| r.relation == Relation::Le).unwrap();
        assert_abs_diff_eq!(below.rhs, 1.85, epsilon = 1e-12);

        let rect_plies = vec![rect("r", 0, 1.0, 1.0, FRAC_PI_2)];
        let ctx = BundleContext::new(&rect_plies, &[], c);
        let table = vec![vec![0.0, 0.5]];
        assert!(quality_rows(&ctx, 0, &table, &ctx.probe(&table)).unwrap().is_empty());
    }

    #[test]
    fn quality_row_offset_half_above_vertex() {
        // Vertex at offset 0.5 with min 0.15 and the seam above: x >= 0.65.
        let plies = vec![rect("r", 0, 1.0, 1.0, FRAC_PI_2)];
        let mut c = cfg();
        c.small_min = 0.15;
        let mut ctx = BundleContext::new(&plies, &[], c);
        ctx.frames[0].small = vec![0.5];
        let table = vec![vec![0.0, 0.7]];
        let rows = quality_rows(&ctx, 0, &table, &ctx.probe(&table)).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].relation, Relation::Ge);
        assert_abs_diff_eq!(rows[0].rhs, 0.65, epsilon = 1e-12);
    }

    #[test]
    fn subspaces_without_obstacles() {
        let plies = vec![rect("r", 0, 1.0, 1.0, FRAC_PI_2)];
        let ctx = BundleContext::new(&plies, &[], cfg());
        let subs = enumerate_subspaces(&ctx, &vec![vec![0.0]], 0);
        assert_eq!(subs.len(), 1);
        assert_abs_diff_eq!(subs[0].interval.lo, 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(subs[0].interval.hi, 0.25, epsilon = 1e-12);
    }

    fn zone_over_offsets(lo: f64, hi: f64) -> StayOutZone {
        // For rect(.., pi/2) offset = 1 - x.
        StayOutZone::new(vec![
            Point2::new(1.0 - hi, 0.3),
            Point2::new(1.0 - lo, 0.3),
            Point2::new(1.0 - lo, 0.6),
            Point2::new(1.0 - hi, 0.6),
        ])
        .unwrap()
    }

    #[test]
    fn stayout_splits_window_upper_first() {
        let plies = vec![rect("r", 0, 1.0, 1.0, FRAC_PI_2)];
        let zones = vec![zone_over_offsets(0.16, 0.19)];
        let ctx = BundleContext::new(&plies, &zones, cfg());
        let subs = enumerate_subspaces(&ctx, &vec![vec![0.0]], 0);
        assert_eq!(subs.len(), 2);
        assert!(subs[0].interval.lo > subs[1].interval.hi);
        assert_abs_diff_eq!(subs[0].interval.lo, 0.215, epsilon = 1e-12);
        assert_abs_diff_eq!(subs[1].interval.hi, 0.135, epsilon = 1e-12);
    }

    #[test]
    fn fully_blocked_window_has_no_subspace() {
        let plies = vec![rect("r", 0, 1.0, 1.0, FRAC_PI_2)];
        let zones = vec![zone_over_offsets(0.05, 0.3)];
        let ctx = BundleContext::new(&plies, &zones, cfg());
        assert!(enumerate_subspaces(&ctx, &vec![vec![0.0]], 0).is_empty());
    }

    #[test]
    fn triple_rows_through_one_point_are_violated() {
        let hex = hexagon(1.0);
        let plies: Vec<Ply> = [0.0, PI / 3.0, 2.0 * PI / 3.0]
            .iter()
            .enumerate()
            .map(|(i, &a)| Ply::new(format!("p{i}"), i as u32, hex.clone(), a).unwrap())
            .collect();
        let ctx = BundleContext::new(&plies, &[], cfg());
        // Offsets through the centre of the hexagon.
        let table: SeamTable = plies
            .iter()
            .map(|p| vec![0.0, p.offset_of(Point2::new(0.0, 0.0))])
            .collect();
        let br = ctx.probe(&table);
        let rows = triple_rows(&ctx, &table, &br).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows.iter().all(|r| r.violation(&table) > 0.0));
        let [a, b, c] = ctx.triples_in_scope(&table)[0];
        let area = geometry::triple_overlap_area(
            &ctx.strip(&table, a),
            &ctx.strip(&table, b),
            &ctx.strip(&table, c),
            &hex,
        );
        assert!(area > 0.0);
    }

    #[test]
    fn triple_rows_far_apart_are_satisfied() {
        let hex = hexagon(1.0);
        let plies: Vec<Ply> = [0.0, PI / 3.0, 2.0 * PI / 3.0]
            .iter()
            .enumerate()
            .map(|(i, &a)| Ply::new(format!("p{i}"), i as u32, hex.clone(), a).unwrap())
            .collect();
        let ctx = BundleContext::new(&plies, &[], cfg());
        // Shift the third seam well away from the other two's crossing.
        let mut table: SeamTable = plies
            .iter()
            .map(|p| vec![0.0, p.offset_of(Point2::new(0.0, 0.0))])
            .collect();
        table[2][1] += 0.4;
        let br = ctx.probe(&table);
        let rows = triple_rows(&ctx, &table, &br).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows.iter().all(|r| r.violation(&table) == 0.0));
        let [a, b, c] = ctx.triples_in_scope(&table)[0];
        let area = geometry::triple_overlap_area(
            &ctx.strip(&table, a),
            &ctx.strip(&table, b),
            &ctx.strip(&table, c),
            &hex,
        );
        assert_eq!(area, 0.0);
    }

    #[test]
    fn parallel_seams_never_form_triples() {
        let plies = vec![
            rect("a", 0, 1.0, 1.0, 0.0),
            rect("b", 1, 1.0, 1.0, 0.0),
            rect("c", 2, 1.0, 1.0, FRAC_PI_2),
        ];
        let ctx = BundleContext::new(&plies, &[], cfg());
        let table = vec![vec![0.0, 0.5], vec![0.0, 0.5], vec![0.0, 0.5]];
        assert!(ctx.triples_in_scope(&table).is_empty());
    }

    pub(crate) fn hexagon(r: f64) -> Vec<Point2> {
        (0..6)
            .map(|k| {
                let t = PI / 3.0 * k as f64;
                Point2::new(r * t.cos(), r * t.sin())
            })
            .collect()
    }
}
