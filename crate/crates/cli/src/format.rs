//! Project and result files: versioned, pretty-printed JSON.
//!
//! Angles are in degrees on disk and radians in memory.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use plypart_core::constraints::Bundle;
use plypart_core::cost::{CostBreakdown, NestLayout};
use plypart_core::search::{Outcome, SearchReport, Violation};
use plypart_core::{CostParams, Design, LineStd, ManufacturingConfig, Ply, Point2, StayOutZone};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub const FORMAT_VERSION: u32 = 1;

/// A bad input file, located as precisely as the parser allows.
#[derive(Debug, Clone, PartialEq)]
pub struct InputError {
    pub origin: String,
    /// Field path such as `plies[2].vertices`, empty for the whole file.
    pub field: String,
    pub message: String,
}

impl InputError {
    pub fn new(origin: &str, field: impl Into<String>, message: impl fmt::Display) -> Self {
        Self {
            origin: origin.to_string(),
            field: field.into(),
            message: message.to_string(),
        }
    }
}

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.field.is_empty() || self.field == "." {
            write!(f, "{}: {}", self.origin, self.message)
        } else {
            write!(f, "{}: {}: {}", self.origin, self.field, self.message)
        }
    }
}

impl std::error::Error for InputError {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlyRecord {
    pub id: String,
    pub stack_index: u32,
    pub vertices: Vec<[f64; 2]>,
    pub fiber_angle_degrees: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StayOutRecord {
    pub vertices: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectFile {
    pub format_version: u32,
    pub plies: Vec<PlyRecord>,
    #[serde(default)]
    pub stayouts: Vec<StayOutRecord>,
    pub config: ManufacturingConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost_params: Option<CostParams>,
    /// Group perpendicular orientations into bundles.
    #[serde(default)]
    pub sort_by_orientation: bool,
}

/// A checked project with its geometry built.
#[derive(Debug, Clone, PartialEq)]
pub struct Project {
    pub file: ProjectFile,
    pub plies: Vec<Ply>,
    pub zones: Vec<StayOutZone>,
}

fn points(vertices: &[[f64; 2]]) -> Vec<Point2> {
    vertices.iter().map(|&[x, y]| Point2::new(x, y)).collect()
}

impl ProjectFile {
    pub fn build(&self, origin: &str) -> Result<Project, InputError> {
        check_version(origin, self.format_version)?;
        if self.plies.is_empty() {
            return Err(InputError::new(origin, "plies", "empty layup"));
        }
        let mut seen = BTreeSet::new();
        let mut plies = Vec::with_capacity(self.plies.len());
        for (i, rec) in self.plies.iter().enumerate() {
            if !seen.insert(rec.id.as_str()) {
                return Err(InputError::new(origin, format!("plies[{i}].id"), format!("duplicate ply id `{}`", rec.id)));
            }
            let deg = rec.fiber_angle_degrees;
            if !(0.0..180.0).contains(&deg) {
                return Err(InputError::new(
                    origin,
                    format!("plies[{i}].fiber_angle_degrees"),
                    format!("{deg} is outside [0, 180)"),
                ));
            }
            let ply = Ply::new(rec.id.clone(), rec.stack_index, points(&rec.vertices), deg.to_radians())
                .map_err(|e| InputError::new(origin, format!("plies[{i}].vertices"), e))?;
            plies.push(ply);
        }
        let zones = self
            .stayouts
            .iter()
            .enumerate()
            .map(|(i, z)| {
                StayOutZone::new(points(&z.vertices))
                    .map_err(|e| InputError::new(origin, format!("stayouts[{i}].vertices"), e))
            })
            .collect::<Result<Vec<_>, _>>()?;
        self.config.validate().map_err(|e| InputError::new(origin, "config", e))?;
        if let Some(p) = &self.cost_params {
            p.validate().map_err(|e| InputError::new(origin, "cost_params", e))?;
        }
        Ok(Project {
            file: self.clone(),
            plies,
            zones,
        })
    }
}

fn check_version(origin: &str, v: u32) -> Result<(), InputError> {
    if v != FORMAT_VERSION {
        return Err(InputError::new(
            origin,
            "format_version",
            format!("unsupported version {v}, expected {FORMAT_VERSION}"),
        ));
    }
    Ok(())
}

/// Seams of one ply: offsets from the ply origin and the matching lines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlySeams {
    pub id: String,
    pub offsets: Vec<f64>,
    pub lines: Vec<LineStd>,
}

/// A violation, tagged with the bundle it was found in. Seams inside the
/// violation are numbered by position within that bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleViolation {
    pub bundle: usize,
    #[serde(flatten)]
    pub violation: Violation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultFile {
    pub format_version: u32,
    pub beam_width: usize,
    pub seed: u64,
    pub outcome: Outcome,
    pub objective: f64,
    pub plies: Vec<PlySeams>,
    /// Ply ids of every bundle, in bundle order.
    pub bundles: Vec<Vec<String>>,
    pub validation: Vec<BundleViolation>,
    pub report: SearchReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<CostBreakdown>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nest: Option<NestLayout>,
    /// The project the result was computed from.
    pub project: ProjectFile,
}

impl ResultFile {
    pub fn design(&self) -> Design {
        Design::new(self.plies.iter().map(|p| (p.id.clone(), p.offsets.clone())).collect())
    }

    /// Bundles rebuilt from `plies` by id.
    pub fn bundles_from(&self, plies: &[Ply]) -> Result<Vec<Bundle>, String> {
        let by_id: BTreeMap<&str, &Ply> = plies.iter().map(|p| (p.id.as_str(), p)).collect();
        self.bundles
            .iter()
            .map(|ids| {
                ids.iter()
                    .map(|id| by_id.get(id.as_str()).map(|p| (*p).clone()).ok_or_else(|| format!("unknown ply id `{id}`")))
                    .collect::<Result<Vec<_>, _>>()
                    .map(Bundle::new)
            })
            .collect()
    }
}

/// Reads JSON, reporting the field path and position of the first error.
pub fn parse<T: DeserializeOwned>(text: &str, origin: &str) -> Result<T, InputError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let value: T = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let field = e.path().to_string();
        InputError::new(origin, field, e.into_inner())
    })?;
    de.end().map_err(|e| InputError::new(origin, "", e))?;
    Ok(value)
}

fn read(path: &Path) -> Result<String, InputError> {
    std::fs::read_to_string(path).map_err(|e| InputError::new(&path.display().to_string(), "", e))
}

pub fn load_project(path: &Path) -> Result<Project, InputError> {
    let origin = path.display().to_string();
    let file: ProjectFile = parse(&read(path)?, &origin)?;
    file.build(&origin)
}

pub fn load_result(path: &Path) -> Result<ResultFile, InputError> {
    let origin = path.display().to_string();
    let file: ResultFile = parse(&read(path)?, &origin)?;
    check_version(&origin, file.format_version)?;
    Ok(file)
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("file types serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use plypart_core::Tolerance;

    fn project() -> ProjectFile {
        ProjectFile {
            format_version: FORMAT_VERSION,
            plies: vec![PlyRecord {
                id: "a".into(),
                stack_index: 0,
                vertices: vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
                fiber_angle_degrees: 60.0,
            }],
            stayouts: vec![],
            config: ManufacturingConfig::new(0.3, 0.05, 0.1),
            cost_params: None,
            sort_by_orientation: false,
        }
    }

    #[test]
    fn degrees_become_radians() {
        let p = project().build("t").unwrap();
        assert!((p.plies[0].fiber_angle() - std::f64::consts::PI / 3.0).abs() < 1e-15);
    }

    #[test]
    fn project_round_trips() {
        let mut f = project();
        f.config.tolerance = Tolerance::Explicit {
            plies: 4,
            max_overlaps: 1,
        };
        f.cost_params = Some(CostParams::default());
        let back: ProjectFile = parse(&to_json(&f), "t").unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn type_errors_name_the_field() {
        let text = to_json(&project()).replace("\"stack_index\": 0", "\"stack_index\": \"zero\"");
        let err = parse::<ProjectFile>(&text, "p.json").unwrap_err();
        assert_eq!(err.field, "plies[0].stack_index");
        assert!(err.message.contains("line"), "{err}");
    }

    #[test]
    fn unknown_fields_rejected() {
        let text = to_json(&project()).replace("\"stack_index\"", "\"stack\"");
        assert!(parse::<ProjectFile>(&text, "p.json").is_err());
    }

    #[test]
    fn semantic_errors_name_the_field() {
        let mut f = project();
        f.plies[0].fiber_angle_degrees = 180.0;
        assert_eq!(f.build("t").unwrap_err().field, "plies[0].fiber_angle_degrees");
        let mut f = project();
        f.plies[0].vertices = vec![[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]];
        assert_eq!(f.build("t").unwrap_err().field, "plies[0].vertices");
        let mut f = project();
        f.plies.clear();
        assert_eq!(f.build("t").unwrap_err().message, "empty layup");
        let mut f = project();
        f.plies.push(f.plies[0].clone());
        assert_eq!(f.build("t").unwrap_err().field, "plies[1].id");
        let mut f = project();
        f.format_version = 9;
        assert_eq!(f.build("t").unwrap_err().field, "format_version");
    }
}
