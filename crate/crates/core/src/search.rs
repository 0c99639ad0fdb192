//! Seam insertion, greedy and beam search, and design validation.
//!
//! Plies of a bundle are partitioned in order. Each insertion appends one
//! seam to the current ply: the admissible window for the new seam is cut
//! into linear subspaces ([`enumerate_subspaces`]), and for each subspace
//! an LP re-optimizes every seam of the bundle with the branches of the
//! already placed seams frozen. Greedy search keeps the first subspace that
//! solves; beam search keeps every child and prunes each generation to the
//! best `beam_width` designs.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use geo::BooleanOps;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constraints::{
    self, all_rows, enumerate_subspaces, parallel_chain_rows, spool_rows, triple_row,
    BranchAssignment, Bundle, BundleContext, Row, RowKind, SeamRef, SeamTable, ROW_TOLERANCE,
};
use crate::error::{PlyError, Result};
use crate::geometry::{self, Interval};
use crate::lp::{self, LinearProgram, LpStatus, Relation};
use crate::model::{Design, ManufacturingConfig, Ply, StayOutZone};

/// Oracle triple-overlap areas above this count as a violation.
pub const ORACLE_AREA_TOLERANCE: f64 = 1e-10;

/// Triple rows with more slack than this at the starting point are left
/// out of the LP until a solution violates them.
const LAZY_MARGIN: f64 = 0.05;

/// Violation that pulls a lazy row into the LP.
const LAZY_TOLERANCE: f64 = 1e-10;

/// Rounds of final re-optimization before a design is given up on.
const FINAL_ROUNDS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Complete,
    Infeasible,
}

/// Where a search got stuck.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub ply_id: String,
    /// Offset of the last seam placed on the ply.
    pub last_offset: f64,
    /// Window the next seam had to fall into.
    pub window: Interval,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub nodes_explored: usize,
    pub lp_solves: usize,
    pub generations: usize,
    /// Wall-clock time; deliberately not serialized so result files are
    /// reproducible byte for byte.
    #[serde(skip)]
    pub wall_time: Duration,
    pub outcome: Option<Outcome>,
    pub failure: Option<Failure>,
}

impl SearchReport {
    fn absorb(&mut self, other: &SearchReport) {
        self.nodes_explored += other.nodes_explored;
        self.lp_solves += other.lp_solves;
        self.generations += other.generations;
        self.wall_time += other.wall_time;
        if self.failure.is_none() {
            self.failure.clone_from(&other.failure);
        }
        self.outcome = match (self.outcome, other.outcome) {
            (Some(Outcome::Infeasible), _) | (_, Some(Outcome::Infeasible)) => {
                Some(Outcome::Infeasible)
            }
            _ => Some(Outcome::Complete),
        };
    }
}

/// Result of a search: the best design reached and how the search went.
/// On failure the design holds the partial partition reached.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub design: Design,
    pub report: SearchReport,
}

impl SearchResult {
    pub fn is_complete(&self) -> bool {
        self.report.outcome == Some(Outcome::Complete)
    }
}

/// A partial design in the search tree.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchNode {
    pub table: SeamTable,
    /// Ply currently receiving seams; equals the bundle size once done.
    pub ply: usize,
    /// Total seam count, boundary seams included.
    pub generation: usize,
    pub objective: f64,
    pub feasible: bool,
}

impl SearchNode {
    fn root(ctx: &BundleContext) -> Self {
        let mut node = Self {
            table: vec![vec![0.0]; ctx.plies.len()],
            ply: 0,
            generation: ctx.plies.len(),
            objective: 0.0,
            feasible: true,
        };
        node.advance(ctx);
        node
    }

    fn from_table(ctx: &BundleContext, table: SeamTable, ply: usize) -> Self {
        let mut node = Self {
            generation: table.iter().map(Vec::len).sum(),
            objective: objective_of(&table),
            table,
            ply,
            feasible: true,
        };
        node.advance(ctx);
        node
    }

    /// Skips past plies that are already covered.
    fn advance(&mut self, ctx: &BundleContext) {
        while self.ply < ctx.plies.len() && covered(ctx, &self.table, self.ply) {
            self.ply += 1;
        }
    }

    pub fn is_complete(&self, ctx: &BundleContext) -> bool {
        self.ply >= ctx.plies.len()
    }

    fn rank_cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.objective
            .total_cmp(&other.objective)
            .then(self.generation.cmp(&other.generation))
            .then_with(|| {
                let a = self.table.iter().flatten();
                let b = other.table.iter().flatten();
                a.zip(b)
                    .map(|(x, y)| x.total_cmp(y))
                    .find(|o| o.is_ne())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
    }

    fn key(&self) -> Vec<u64> {
        self.table.iter().flatten().map(|x| x.to_bits()).collect()
    }
}

fn objective_of(table: &SeamTable) -> f64 {
    -table.iter().map(|o| *o.last().unwrap_or(&0.0)).sum::<f64>()
}

fn covered(ctx: &BundleContext, table: &SeamTable, ply: usize) -> bool {
    let last = *table[ply].last().expect("boundary seam present");
    ctx.config.is_covered(ctx.frames[ply].width, last)
}

/// Plies whose coverage row applies: those before `current`.
fn covered_mask(n: usize, current: usize) -> Vec<bool> {
    (0..n).map(|p| p < current).collect()
}

#[derive(Debug, Default, Clone, Copy)]
struct Counters {
    lp_solves: usize,
}

/// Re-optimizes all interior seams of the bundle at `branch`.
///
/// Single-variable rows become variable bounds; parallel rows are reduced
/// to chains and each triple contributes one of its three equivalent rows.
/// Returns the optimized table or `None` when the subspace is infeasible.
fn optimize(
    ctx: &BundleContext,
    table: &SeamTable,
    branch: &BranchAssignment,
    covered: &[bool],
    counters: &mut Counters,
) -> Result<Option<SeamTable>> {
    let vars: Vec<SeamRef> = ctx.interior_seams(table);
    if vars.is_empty() {
        return Ok(Some(table.clone()));
    }
    let index: BTreeMap<SeamRef, usize> = vars.iter().enumerate().map(|(i, s)| (*s, i)).collect();
    let mut rows: Vec<Row> = Vec::new();
    for p in 0..table.len() {
        rows.extend(spool_rows(ctx, p, table));
        rows.extend(constraints::quality_rows(ctx, p, table, branch)?);
        if covered[p] && table[p].len() > 1 {
            rows.push(constraints::coverage_row(ctx, p, table));
        }
    }
    rows.extend(constraints::stayout_rows(ctx, table, branch)?);
    rows.extend(parallel_chain_rows(ctx, table, branch)?);
    let n_eager = rows.len();
    for t in ctx.triples_in_scope(table) {
        let sides = branch.triple.get(&t).ok_or_else(|| {
            PlyError::MissingBranch(format!("triple {} / {} / {}", t[0], t[1], t[2]))
        })?;
        rows.push(triple_row(ctx, table, t, 0, sides[0]));
    }

    let mut lp = LinearProgram::new(vars.len());
    for (i, s) in vars.iter().enumerate() {
        lp.bounds[i] = (0.0, ctx.frames[s.ply].width);
    }
    for p in 0..table.len() {
        let last = table[p].len() - 1;
        if last > 0 {
            lp.objective[index[&SeamRef::new(p, last)]] = -1.0;
        }
    }
    // Triple rows are many and mostly slack; they enter the LP lazily.
    let mut lazy: Vec<(Vec<(usize, f64)>, Relation, f64)> = Vec::new();
    for (k, row) in rows.iter().enumerate() {
        // Boundary seams are fixed at offset 0 and drop out.
        let terms: Vec<(usize, f64)> = row
            .terms
            .iter()
            .filter(|(s, a)| !s.is_boundary() && *a != 0.0)
            .map(|(s, a)| (index[s], *a))
            .collect();
        match terms.as_slice() {
            [] => {
                let ok = match row.relation {
                    Relation::Le => 0.0 <= row.rhs + ROW_TOLERANCE,
                    Relation::Ge => 0.0 >= row.rhs - ROW_TOLERANCE,
                    Relation::Eq => row.rhs.abs() <= ROW_TOLERANCE,
                };
                if !ok {
                    return Ok(None);
                }
            }
            [(v, a)] => {
                let bound = row.rhs / a;
                let upper = matches!(
                    (row.relation, *a > 0.0),
                    (Relation::Le, true) | (Relation::Ge, false)
                );
                let (lo, hi) = &mut lp.bounds[*v];
                if row.relation == Relation::Eq {
                    *lo = lo.max(bound);
                    *hi = hi.min(bound);
                } else if upper {
                    *hi = hi.min(bound);
                } else {
                    *lo = lo.max(bound);
                }
            }
            _ if k >= n_eager && slack(row, table) > LAZY_MARGIN => {
                lazy.push((terms, row.relation, row.rhs));
            }
            _ => lp.add_sparse(&terms, row.relation, row.rhs),
        }
    }
    if lp.bounds.iter().any(|(lo, hi)| lo > hi) {
        return Ok(None);
    }
    let solution = loop {
        counters.lp_solves += 1;
        let res = lp::solve(&lp)?;
        if res.status != LpStatus::Optimal {
            return Ok(None);
        }
        let x = res.solution;
        let before = lazy.len();
        lazy.retain(|(terms, relation, rhs)| {
            let lhs: f64 = terms.iter().map(|&(i, a)| a * x[i]).sum();
            let violated = match relation {
                Relation::Le => lhs > rhs + LAZY_TOLERANCE,
                Relation::Ge => lhs < rhs - LAZY_TOLERANCE,
                Relation::Eq => (lhs - rhs).abs() > LAZY_TOLERANCE,
            };
            if violated {
                lp.add_sparse(terms, *relation, *rhs);
            }
            !violated
        });
        if lazy.len() == before {
            break x;
        }
    };
    let mut out = table.clone();
    for (i, s) in vars.iter().enumerate() {
        out[s.ply][s.index] = solution[i];
    }
    Ok(Some(out))
}

/// How far a row is from binding at `table`; negative when violated.
fn slack(row: &Row, table: &SeamTable) -> f64 {
    let lhs = row.lhs(table);
    match row.relation {
        Relation::Le => row.rhs - lhs,
        Relation::Ge => lhs - row.rhs,
        Relation::Eq => -(lhs - row.rhs).abs(),
    }
}

/// Window for the next seam on `ply`, for failure reports.
fn window_of(ctx: &BundleContext, table: &SeamTable, ply: usize) -> Interval {
    let prev = *table[ply].last().expect("boundary seam present");
    Interval::new(
        prev + ctx.config.min_subply_width,
        (prev + ctx.config.max_gap()).min(ctx.frames[ply].width),
    )
}

fn failure_at(ctx: &BundleContext, node: &SearchNode, reason: &str) -> Failure {
    let ply = node.ply.min(ctx.plies.len() - 1);
    Failure {
        ply_id: ctx.plies[ply].id.clone(),
        last_offset: *node.table[ply].last().expect("boundary seam present"),
        window: window_of(ctx, &node.table, ply),
        reason: reason.to_string(),
    }
}

/// Appends one seam to `ply` and re-optimizes the bundle, trying the
/// candidate subspaces farthest first. `None` when every subspace fails.
pub fn insert_seam(ctx: &BundleContext, table: &SeamTable, ply: usize) -> Result<Option<SeamTable>> {
    let mut counters = Counters::default();
    insert_first(ctx, table, ply, &mut counters)
}

fn insert_first(
    ctx: &BundleContext,
    table: &SeamTable,
    ply: usize,
    counters: &mut Counters,
) -> Result<Option<SeamTable>> {
    let covered = covered_mask(table.len(), ply);
    for sub in enumerate_subspaces(ctx, table, ply) {
        let mut start = table.clone();
        start[ply].push(sub.probe);
        if let Some(t) = optimize(ctx, &start, &sub.branch, &covered, counters)? {
            return Ok(Some(t));
        }
    }
    Ok(None)
}

/// One child per subspace that solves, in subspace order.
fn insert_all(
    ctx: &BundleContext,
    table: &SeamTable,
    ply: usize,
    counters: &mut Counters,
) -> Result<Vec<SeamTable>> {
    let covered = covered_mask(table.len(), ply);
    let mut out = Vec::new();
    for sub in enumerate_subspaces(ctx, table, ply) {
        let mut start = table.clone();
        start[ply].push(sub.probe);
        if let Some(t) = optimize(ctx, &start, &sub.branch, &covered, counters)? {
            out.push(t);
        }
    }
    Ok(out)
}

/// Re-runs the LP on a complete design at its own branches until the full
/// validation passes. `None` when the violations persist.
fn finalize(ctx: &BundleContext, table: &SeamTable, counters: &mut Counters) -> Result<Option<SeamTable>> {
    let covered = vec![true; table.len()];
    let mut current = table.clone();
    for _ in 0..FINAL_ROUNDS {
        let branch = ctx.probe(&current);
        if let Some(t) = optimize(ctx, &current, &branch, &covered, counters)? {
            current = t;
        }
        if validate_table(ctx, &current)?.is_empty() {
            return Ok(Some(current));
        }
    }
    Ok(None)
}

fn to_design(ctx: &BundleContext, table: &SeamTable) -> Design {
    Design::new(
        ctx.plies
            .iter()
            .zip(table)
            .map(|(p, offs)| (p.id.clone(), offs.clone()))
            .collect(),
    )
}

fn finish(
    ctx: &BundleContext,
    node: &SearchNode,
    counters: &mut Counters,
    report: &mut SearchReport,
) -> Result<Design> {
    match finalize(ctx, &node.table, counters)? {
        Some(t) => {
            report.outcome = Some(Outcome::Complete);
            Ok(to_design(ctx, &t))
        }
        None => {
            report.outcome = Some(Outcome::Infeasible);
            report.failure = Some(failure_at(ctx, node, "final validation failed"));
            Ok(to_design(ctx, &node.table))
        }
    }
}

/// Greedy partition of one bundle: farthest feasible seam first, ply by ply.
pub fn greedy_partition(
    bundle: &Bundle,
    zones: &[StayOutZone],
    config: &ManufacturingConfig,
) -> Result<SearchResult> {
    config.validate()?;
    let started = Instant::now();
    let ctx = BundleContext::new(&bundle.plies, zones, *config);
    let mut counters = Counters::default();
    let mut report = SearchReport::default();
    let mut node = SearchNode::root(&ctx);
    report.nodes_explored = 1;
    let design = loop {
        if node.is_complete(&ctx) {
            break finish(&ctx, &node, &mut counters, &mut report)?;
        }
        match insert_first(&ctx, &node.table, node.ply, &mut counters)? {
            Some(t) => {
                node = SearchNode::from_table(&ctx, t, node.ply);
                report.nodes_explored += 1;
                report.generations += 1;
            }
            None => {
                report.outcome = Some(Outcome::Infeasible);
                report.failure = Some(failure_at(&ctx, &node, "no feasible subspace"));
                break to_design(&ctx, &node.table);
            }
        }
    };
    report.lp_solves = counters.lp_solves;
    report.wall_time = started.elapsed();
    Ok(SearchResult { design, report })
}

/// Beam search over one bundle. Every generation expands each kept design
/// by one seam in every feasible subspace, then keeps the best
/// `beam_width` distinct children. Stops at the first generation holding a
/// complete design; if the frontier empties, the best design of the last
/// generation is returned with an infeasible outcome.
pub fn beam_partition(
    bundle: &Bundle,
    zones: &[StayOutZone],
    config: &ManufacturingConfig,
    beam_width: usize,
) -> Result<SearchResult> {
    if beam_width == 0 {
        return Err(PlyError::Config("beam width must be at least 1".into()));
    }
    config.validate()?;
    let started = Instant::now();
    let ctx = BundleContext::new(&bundle.plies, zones, *config);
    let mut counters = Counters::default();
    let mut report = SearchReport::default();
    let mut frontier = vec![SearchNode::root(&ctx)];
    report.nodes_explored = 1;
    let design = loop {
        if let Some(done) = frontier.iter().find(|n| n.is_complete(&ctx)) {
            let done = done.clone();
            break finish(&ctx, &done, &mut counters, &mut report)?;
        }
        let expanded: Vec<Result<(Vec<SeamTable>, usize)>> = frontier
            .par_iter()
            .map(|node| {
                let mut c = Counters::default();
                insert_all(&ctx, &node.table, node.ply, &mut c).map(|v| (v, c.lp_solves))
            })
            .collect();
        let mut children = Vec::new();
        let mut seen = BTreeSet::new();
        for (node, res) in frontier.iter().zip(expanded) {
            let (tables, solves) = res?;
            counters.lp_solves += solves;
            for t in tables {
                let child = SearchNode::from_table(&ctx, t, node.ply);
                if seen.insert(child.key()) {
                    children.push(child);
                }
            }
        }
        if children.is_empty() {
            report.outcome = Some(Outcome::Infeasible);
            report.failure = Some(failure_at(&ctx, &frontier[0], "beam frontier emptied"));
            break to_design(&ctx, &frontier[0].table);
        }
        report.nodes_explored += children.len();
        report.generations += 1;
        children.sort_by(SearchNode::rank_cmp);
        children.truncate(beam_width);
        frontier = children;
    };
    report.lp_solves = counters.lp_solves;
    report.wall_time = started.elapsed();
    Ok(SearchResult { design, report })
}

/// Search strategy for [`partition_layup`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Greedy,
    Beam(usize),
}

impl Strategy {
    /// Beam width 1 is the greedy search.
    pub fn from_beam_width(k: usize) -> Self {
        if k <= 1 {
            Strategy::Greedy
        } else {
            Strategy::Beam(k)
        }
    }
}

/// Partition of a whole layup, bundle by bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct LayupResult {
    pub bundles: Vec<Bundle>,
    pub design: Design,
    pub report: SearchReport,
}

/// Splits the layup into bundles and searches each one independently.
pub fn partition_layup(
    layup: &[Ply],
    zones: &[StayOutZone],
    config: &ManufacturingConfig,
    sort_by_orientation: bool,
    strategy: Strategy,
) -> Result<LayupResult> {
    config.validate()?;
    if layup.is_empty() {
        return Err(PlyError::EmptyLayup);
    }
    let plies = layup.len();
    let n_max = config.tolerance.max_overlaps(plies).min(plies);
    // A base overlap count reaching the tolerance leaves no room for
    // splitting: the whole layup forms one bundle.
    let m = if n_max > 0 && config.base_overlaps >= n_max {
        plies
    } else {
        constraints::bundle_size(plies, n_max, config.base_overlaps)?
    };
    let bundles = constraints::make_bundles(layup, m, sort_by_orientation)?;
    let results: Vec<Result<SearchResult>> = bundles
        .par_iter()
        .map(|b| match strategy {
            Strategy::Greedy => greedy_partition(b, zones, config),
            Strategy::Beam(k) => beam_partition(b, zones, config, k),
        })
        .collect();
    let mut design = Design::default();
    let mut report = SearchReport::default();
    for r in results {
        let r = r?;
        report.absorb(&r.report);
        design.extend(r.design);
    }
    Ok(LayupResult {
        bundles,
        design,
        report,
    })
}

/// A broken rule in a design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    #[serde(flatten)]
    pub kind: RowKind,
    /// Amount by which the row is violated.
    pub excess: f64,
    /// Oracle triple-overlap area, for triple violations.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub oracle_area: Option<f64>,
}

/// Area of the common part of three seam overlap bands inside all three
/// ply outlines.
pub fn oracle_triple_area(ctx: &BundleContext, table: &SeamTable, t: [SeamRef; 3]) -> f64 {
    let [a, b, c] = t;
    let mut domains = vec![ctx.plies[a.ply].polygon().to_vec()];
    for p in [b.ply, c.ply] {
        domains = domains
            .iter()
            .flat_map(|d| geometry::clip_polygon(d, ctx.plies[p].polygon()))
            .collect();
    }
    let (sa, sb, sc) = (ctx.strip(table, a), ctx.strip(table, b), ctx.strip(table, c));
    domains
        .iter()
        .map(|d| geometry::triple_overlap_area(&sa, &sb, &sc, d))
        .sum()
}

/// Every violated rule of a complete bundle design, plus triples whose
/// oracle overlap area is positive.
pub fn validate_table(ctx: &BundleContext, table: &SeamTable) -> Result<Vec<Violation>> {
    let branch = ctx.probe(table);
    let covered = vec![true; table.len()];
    let mut out = Vec::new();
    let mut flagged = BTreeSet::new();
    for row in all_rows(ctx, table, &branch, &covered)? {
        let excess = row.violation(table);
        if excess > ROW_TOLERANCE {
            let oracle_area = match row.kind {
                RowKind::Triple { seams, combo } => {
                    if combo != 0 || !flagged.insert(seams) {
                        continue;
                    }
                    Some(oracle_triple_area(ctx, table, seams))
                }
                _ => None,
            };
            out.push(Violation {
                kind: row.kind,
                excess,
                oracle_area,
            });
        }
    }
    for t in ctx.triples_in_scope(table) {
        if flagged.contains(&t) {
            continue;
        }
        let area = oracle_triple_area(ctx, table, t);
        if area > ORACLE_AREA_TOLERANCE {
            out.push(Violation {
                kind: RowKind::Triple { seams: t, combo: 0 },
                excess: 0.0,
                oracle_area: Some(area),
            });
        }
    }
    Ok(out)
}

/// Seam table of `bundle` read from `design`.
pub fn table_of(design: &Design, bundle: &Bundle) -> Result<SeamTable> {
    bundle
        .plies
        .iter()
        .map(|p| {
            design
                .offsets(&p.id)
                .filter(|o| !o.is_empty())
                .map(<[f64]>::to_vec)
                .ok_or_else(|| PlyError::UnknownPly(p.id.clone()))
        })
        .collect()
}

/// Validates one bundle of a design.
pub fn validate(
    design: &Design,
    bundle: &Bundle,
    zones: &[StayOutZone],
    config: &ManufacturingConfig,
) -> Result<Vec<Violation>> {
    let table = table_of(design, bundle)?;
    let ctx = BundleContext::new(&bundle.plies, zones, *config);
    let mut out = validate_table(&ctx, &table)?;
    // Violations refer to seams by bundle position; keep them ordered.
    out.sort_by(|a, b| format!("{:?}", a.kind).cmp(&format!("{:?}", b.kind)));
    Ok(out)
}

/// Overlap bands of a design as polygons, with their ply ids.
pub fn overlap_bands(
    design: &Design,
    plies: &[Ply],
    config: &ManufacturingConfig,
) -> Vec<(String, Vec<Vec<Vec<crate::model::Point2>>>)> {
    let h = config.half_overlap();
    plies
        .iter()
        .filter_map(|p| design.offsets(&p.id).map(|o| (p, o)))
        .map(|(p, offs)| {
            let bands = offs
                .iter()
                .filter(|&&x| geometry::seam_polygon_intersects(p, x))
                .map(|&x| {
                    let strip = geometry::Strip::new(crate::model::seam_to_line(p, x), h);
                    geometry::clip_polygon(p.polygon(), &strip_polygon(&strip, p))
                })
                .collect();
            (p.id.clone(), bands)
        })
        .collect()
}

/// The strip as a quadrilateral large enough to cover `ply`.
fn strip_polygon(strip: &geometry::Strip, ply: &Ply) -> Vec<crate::model::Point2> {
    let n = strip.center_line.normal();
    let dir = crate::model::Point2::new(-n.y, n.x);
    let reach = ply
        .polygon()
        .iter()
        .map(|q| q.norm())
        .fold(0.0, f64::max)
        * 2.0
        + 1.0;
    // Foot of the perpendicular from the origin onto the centre line.
    let foot = n * (-strip.center_line.c / n.dot(n));
    let h = strip.half_width;
    vec![
        foot + n * (-h) + dir * (-reach),
        foot + n * (-h) + dir * reach,
        foot + n * h + dir * reach,
        foot + n * h + dir * (-reach),
    ]
}

/// Largest number of overlap bands of a design sharing a region of
/// positive area, over all plies given.
pub fn max_stacking_depth(design: &Design, plies: &[Ply], config: &ManufacturingConfig) -> usize {
    let regions: Vec<geo::MultiPolygon<f64>> = overlap_bands(design, plies, config)
        .into_iter()
        .flat_map(|(_, bands)| bands)
        .filter(|b| !b.is_empty())
        .map(|b| geo::MultiPolygon::new(b.iter().map(|p| geometry::to_geo(p)).collect()))
        .collect();
    let n = regions.len();
    let adjacent: Vec<Vec<bool>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| i != j && positive(&regions[i].intersection(&regions[j])))
                .collect()
        })
        .collect();
    let mut best = usize::from(n > 0);
    for i in 0..n {
        let candidates: Vec<usize> = (i + 1..n).filter(|&j| adjacent[i][j]).collect();
        deepen(&regions, &adjacent, regions[i].clone(), &candidates, 1, &mut best);
    }
    best
}

fn positive(m: &geo::MultiPolygon<f64>) -> bool {
    use geo::Area;
    m.unsigned_area() > ORACLE_AREA_TOLERANCE
}

fn deepen(
    regions: &[geo::MultiPolygon<f64>],
    adjacent: &[Vec<bool>],
    common: geo::MultiPolygon<f64>,
    candidates: &[usize],
    depth: usize,
    best: &mut usize,
) {
    *best = (*best).max(depth);
    if depth + candidates.len() <= *best {
        return;
    }
    for (k, &j) in candidates.iter().enumerate() {
        let next = common.intersection(&regions[j]);
        if !positive(&next) {
            continue;
        }
        let rest: Vec<usize> = candidates[k + 1..]
            .iter()
            .copied()
            .filter(|&l| adjacent[j][l])
            .collect();
        deepen(regions, adjacent, next, &rest, depth + 1, best);
    }
}
