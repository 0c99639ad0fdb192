//! The subcommands, as functions from parsed inputs to file contents.

use std::collections::BTreeSet;
use std::fmt::{self, Write};
use std::time::Duration;

use plypart_core::constraints::Bundle;
use plypart_core::cost::{estimate_cost, extract_subplies, nest, sweep_points};
use plypart_core::geometry::{polygon_area, Strip};
use plypart_core::model::seam_to_line;
use plypart_core::search::{self, beam_partition, greedy_partition, partition_layup, Outcome, Strategy};
use plypart_core::synthetic::{synthetic_problem, SyntheticParams};
use plypart_core::PlyError;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::format::{BundleViolation, InputError, PlySeams, Project, ResultFile, FORMAT_VERSION};
use crate::render;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;

/// Objectives closer than this count as equal in benchmarks.
pub const OBJECTIVE_TOLERANCE: f64 = 1e-7;

/// Stay-out clip areas above this count as hits.
pub const STAYOUT_AREA_TOLERANCE: f64 = 1e-12;

/// An error that maps to the input-error exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError(pub String);

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for CliError {}

impl From<InputError> for CliError {
    fn from(e: InputError) -> Self {
        CliError(e.to_string())
    }
}

impl From<PlyError> for CliError {
    fn from(e: PlyError) -> Self {
        CliError(e.to_string())
    }
}

/// Partitions a project and assembles the result file.
pub fn partition(project: &Project, beam_width: usize, seed: u64) -> Result<ResultFile, CliError> {
    if beam_width == 0 {
        return Err(CliError("--beam-width must be at least 1".into()));
    }
    let cfg = project.file.config;
    let res = partition_layup(
        &project.plies,
        &project.zones,
        &cfg,
        project.file.sort_by_orientation,
        Strategy::from_beam_width(beam_width),
    )?;
    let mut validation = Vec::new();
    for (i, b) in res.bundles.iter().enumerate() {
        for v in search::validate(&res.design, b, &project.zones, &cfg)? {
            validation.push(BundleViolation { bundle: i, violation: v });
        }
    }
    let outcome = res.report.outcome.unwrap_or(Outcome::Infeasible);
    let (cost, layout) = match (&project.file.cost_params, outcome) {
        (Some(params), Outcome::Complete) => {
            let cost = estimate_cost(&res.design, &project.plies, &cfg, params)?;
            let pieces = extract_subplies(&res.design, &project.plies, &cfg)?;
            (Some(cost), Some(nest(&pieces, cfg.spool_width)?))
        }
        _ => (None, None),
    };
    let plies = project
        .plies
        .iter()
        .map(|p| {
            let offsets = res.design.offsets(&p.id).unwrap_or(&[]).to_vec();
            let lines = offsets.iter().map(|&x| seam_to_line(p, x)).collect();
            PlySeams {
                id: p.id.clone(),
                offsets,
                lines,
            }
        })
        .collect();
    Ok(ResultFile {
        format_version: FORMAT_VERSION,
        beam_width,
        seed,
        outcome,
        objective: res.design.objective(),
        plies,
        bundles: res.bundles.iter().map(|b| b.plies.iter().map(|p| p.id.clone()).collect()).collect(),
        validation,
        report: search::SearchReport {
            wall_time: Duration::ZERO,
            ..res.report
        },
        cost,
        nest: layout,
        project: project.file.clone(),
    })
}

/// One line describing where an infeasible search stopped.
pub fn failure_message(result: &ResultFile) -> String {
    match &result.report.failure {
        Some(f) => format!(
            "infeasible: ply {} stuck after seam at {:.6}; next seam window [{:.6}, {:.6}]: {}",
            f.ply_id, f.last_offset, f.window.lo, f.window.hi, f.reason
        ),
        None => "infeasible".to_string(),
    }
}

/// A seam overlap band that cuts into a stay-out zone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StayOutHit {
    pub ply: String,
    pub offset: f64,
    pub zone: usize,
    pub area: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<BundleViolation>,
    /// Independent clipping check of every seam band against every zone.
    pub stayout_oracle: Vec<StayOutHit>,
    pub max_stacking_depth: usize,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty() && self.stayout_oracle.is_empty()
    }
}

/// Re-validates a result against a project.
pub fn validate(result: &ResultFile, project: &Project) -> Result<ValidationReport, CliError> {
    let have: BTreeSet<&str> = result.plies.iter().map(|p| p.id.as_str()).collect();
    let want: BTreeSet<&str> = project.plies.iter().map(|p| p.id.as_str()).collect();
    if have != want {
        let missing: Vec<&str> = want.difference(&have).copied().collect();
        let extra: Vec<&str> = have.difference(&want).copied().collect();
        return Err(CliError(format!(
            "result and project plies differ (missing from result: {missing:?}, unknown to project: {extra:?})"
        )));
    }
    if let Some(p) = result.plies.iter().find(|p| p.offsets.is_empty()) {
        return Err(CliError(format!("ply {} has no seams", p.id)));
    }
    let bundles: Vec<Bundle> = result.bundles_from(&project.plies).map_err(CliError)?;
    let listed: usize = bundles.iter().map(Bundle::len).sum();
    if listed != project.plies.len() {
        return Err(CliError("bundles do not list every ply exactly once".into()));
    }
    let design = result.design();
    let cfg = project.file.config;
    let mut violations = Vec::new();
    for (i, b) in bundles.iter().enumerate() {
        for v in search::validate(&design, b, &project.zones, &cfg)? {
            violations.push(BundleViolation { bundle: i, violation: v });
        }
    }
    let mut stayout_oracle = Vec::new();
    for ply in &project.plies {
        let offsets = design.offsets(&ply.id).unwrap_or(&[]);
        for &x in offsets.iter().skip(1) {
            let strip = Strip::new(seam_to_line(ply, x), cfg.half_overlap());
            for (z, zone) in project.zones.iter().enumerate() {
                let area = polygon_area(&strip.clip(zone.polygon()));
                if area > STAYOUT_AREA_TOLERANCE {
                    stayout_oracle.push(StayOutHit {
                        ply: ply.id.clone(),
                        offset: x,
                        zone: z,
                        area,
                    });
                }
            }
        }
    }
    Ok(ValidationReport {
        violations,
        stayout_oracle,
        max_stacking_depth: search::max_stacking_depth(&design, &project.plies, &cfg),
    })
}

pub const SWEEP_HEADER: &str = "w_s,n_seams,A_l,A_trim,material_cost,seam_cost,total,status";

/// Cost curve over spool widths as CSV. The flag is false when no width
/// was feasible.
pub fn sweep(project: &Project, steps: usize) -> Result<(String, bool), CliError> {
    let params = project
        .file
        .cost_params
        .ok_or_else(|| CliError("project has no cost_params; a sweep needs them".into()))?;
    let points = sweep_points(
        &project.plies,
        &project.zones,
        &project.file.config,
        &params,
        steps,
        project.file.sort_by_orientation,
    )?;
    let mut csv = String::from(SWEEP_HEADER);
    csv.push('\n');
    for p in &points {
        match p.cost {
            Some(c) => writeln!(
                csv,
                "{},{},{},{},{},{},{},feasible",
                p.spool_width, c.n_seam, c.overlap_area, c.trim_area, c.material_cost, c.seam_cost, c.total
            ),
            None => writeln!(csv, "{},,,,,,,infeasible", p.spool_width),
        }
        .expect("writing to a string");
    }
    Ok((csv, points.iter().any(|p| p.feasible)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenderMode {
    Seams,
    Nest,
    Overlaps,
}

pub fn render(result: &ResultFile, mode: RenderMode) -> Result<String, CliError> {
    let project = result.project.build("result project")?;
    let design = result.design();
    let cfg = project.file.config;
    Ok(match mode {
        RenderMode::Seams => render::render_seams(&design, &project.plies, &project.zones, &cfg),
        RenderMode::Overlaps => render::render_overlaps(&design, &project.plies, &project.zones, &cfg),
        RenderMode::Nest => {
            let layout = match &result.nest {
                Some(n) => n.clone(),
                None => nest(&extract_subplies(&design, &project.plies, &cfg)?, cfg.spool_width)?,
            };
            render::render_nest(&layout)
        }
    })
}

/// Settings of the synthetic greedy-versus-beam benchmark.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchParams {
    pub trials: usize,
    pub seed: u64,
    pub beam_width: usize,
    pub spool_width: f64,
    pub overlap_width: f64,
    pub min_subply_width: f64,
    pub max_zones: usize,
}

impl Default for BenchParams {
    fn default() -> Self {
        Self {
            trials: 200,
            seed: 0,
            beam_width: 10_000,
            spool_width: 0.2,
            overlap_width: 0.01,
            min_subply_width: 0.1,
            max_zones: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub trial: usize,
    pub seed: u64,
    pub plies: usize,
    pub zones: usize,
    pub greedy: Outcome,
    pub beam: Outcome,
    /// Sum over plies of the last seam offset.
    pub greedy_length: f64,
    pub beam_length: f64,
    pub greedy_nodes: usize,
    pub beam_nodes: usize,
}

impl BenchRow {
    pub fn equal(&self) -> bool {
        self.greedy == self.beam && (self.greedy_length - self.beam_length).abs() <= OBJECTIVE_TOLERANCE
    }
}

pub const BENCH_HEADER: &str =
    "trial,seed,plies,zones,greedy_status,beam_status,greedy_length,beam_length,greedy_nodes,beam_nodes,equal";

fn status(o: Outcome) -> &'static str {
    match o {
        Outcome::Complete => "complete",
        Outcome::Infeasible => "infeasible",
    }
}

pub fn bench_params(p: &BenchParams) -> SyntheticParams {
    let mut s = SyntheticParams {
        max_zones: p.max_zones.max(1),
        ..SyntheticParams::default()
    };
    s.config.spool_width = p.spool_width;
    s.config.overlap_width = p.overlap_width;
    s.config.min_subply_width = p.min_subply_width;
    s
}

/// Runs greedy and beam search on `trials` synthetic problems whose seeds
/// are drawn from one generator seeded with `seed`.
pub fn bench(p: &BenchParams) -> Result<Vec<BenchRow>, CliError> {
    if p.trials == 0 {
        return Err(CliError("--trials must be at least 1".into()));
    }
    if p.beam_width == 0 {
        return Err(CliError("--beam-width must be at least 1".into()));
    }
    let params = bench_params(p);
    params.config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let seeds: Vec<u64> = (0..p.trials).map(|_| rng.next_u64()).collect();
    seeds
        .par_iter()
        .enumerate()
        .map(|(trial, &seed)| {
            let prob = synthetic_problem(seed, &params);
            let bundle = Bundle::new(prob.plies.clone());
            let g = greedy_partition(&bundle, &prob.zones, &prob.config)?;
            let b = beam_partition(&bundle, &prob.zones, &prob.config, p.beam_width)?;
            Ok(BenchRow {
                trial,
                seed,
                plies: prob.plies.len(),
                zones: prob.zones.len(),
                greedy: g.report.outcome.unwrap_or(Outcome::Infeasible),
                beam: b.report.outcome.unwrap_or(Outcome::Infeasible),
                greedy_length: -g.design.objective(),
                beam_length: -b.design.objective(),
                greedy_nodes: g.report.nodes_explored,
                beam_nodes: b.report.nodes_explored,
            })
        })
        .collect::<Result<Vec<_>, PlyError>>()
        .map_err(CliError::from)
}

pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut csv = String::from(BENCH_HEADER);
    csv.push('\n');
    for r in rows {
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.trial,
            r.seed,
            r.plies,
            r.zones,
            status(r.greedy),
            status(r.beam),
            r.greedy_length,
            r.beam_length,
            r.greedy_nodes,
            r.beam_nodes,
            r.equal()
        )
        .expect("writing to a string");
    }
    csv
}

pub fn bench_summary(rows: &[BenchRow]) -> String {
    let equal = rows.iter().filter(|r| r.equal()).count();
    format!(
        "equality rate: {equal}/{} ({:.1}%)",
        rows.len(),
        100.0 * equal as f64 / rows.len().max(1) as f64
    )
}
